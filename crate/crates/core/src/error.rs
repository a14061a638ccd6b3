use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty region")]
    EmptyRegion,
    #[error("polygon is not convex")]
    NotConvex,
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("degenerate bisector")]
    DegenerateBisector,
    #[error("degenerate configuration: agents {0} and {1} coincide")]
    DegenerateConfiguration(usize, usize),
    #[error("agent {0} lies outside the region")]
    AgentOutsideRegion(usize),
    #[error("second-order coverage requires n >= 2, got n = {0}")]
    TooFewAgents(usize),
    #[error("massless cell (mass {0:e})")]
    MasslessCell(f64),
    #[error("massless agent {0}")]
    MasslessAgent(usize),
    #[error("invalid partition: cell areas sum to {actual}, region area is {expected}")]
    InvalidPartition { expected: f64, actual: f64 },
    #[error("invalid pair key ({0}, {1})")]
    InvalidPairKey(usize, usize),
    #[error("bound undefined for r = {r}, diam Q = {diameter}")]
    BoundUndefined { r: f64, diameter: f64 },
    #[error("step exits region for agent {0}")]
    StepExitsRegion(usize),
    #[error("degenerate step: agents {0} and {1} coincide after the update; reduce dt")]
    DegenerateStep(usize, usize),
    #[error("unstable step: dt * k = {0} must be < 1")]
    UnstableStep(f64),
    #[error("grid baseline requires rectangle")]
    GridRequiresRectangle,
    #[error("underdetermined fit: {measurements} measurements for {components} components (need >= {required})")]
    UnderdeterminedFit {
        measurements: usize,
        components: usize,
        required: usize,
    },
    #[error("degenerate measurements: all feature counts are equal")]
    DegenerateMeasurements,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
