//! Scenario file: one JSON document describing a full run.
//!
//! Lengths are meters, `dt` is seconds, `convergence_eps` is meters per
//! second. Relative density paths resolve against the scenario's directory.

use std::path::{Path, PathBuf};

use photocov_core::density::{GaussianComponent, GaussianMixtureDensity};
use photocov_core::geometry::{ConvexPolygon, Point2};
use photocov_core::simulator::{grid_configuration, random_configuration, AgentConfiguration, SimulationConfig};
use photocov_core::Error;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub region: RegionSpec,
    pub density: DensitySpec,
    pub agents: AgentsSpec,
    pub sensor: SensorSpec,
    #[serde(default)]
    pub simulation: SimulationSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum RegionSpec {
    Rectangle { min: Point2, max: Point2 },
    Polygon { vertices: Vec<Point2> },
}

/// Inline `components`, or a `path` to a density JSON; `floor` overrides either.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensitySpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub components: Option<Vec<GaussianComponent>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub floor: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    Random,
    Grid,
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentsSpec {
    pub count: usize,
    pub init: InitMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positions: Option<Vec<Point2>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorSpec {
    pub fov_radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSpec {
    pub dt: f64,
    pub k: f64,
    pub max_steps: usize,
    pub convergence_eps: f64,
    pub seed: u64,
}

impl Default for SimulationSpec {
    fn default() -> Self {
        let d = SimulationConfig::default();
        Self {
            dt: d.dt,
            k: d.gain,
            max_steps: d.max_steps,
            convergence_eps: d.convergence_eps,
            seed: d.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub directory: PathBuf,
    pub stride: usize,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("out"),
            stride: 1,
        }
    }
}

/// A scenario resolved into library inputs.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub file: ScenarioFile,
    pub region: ConvexPolygon,
    pub density: GaussianMixtureDensity,
    pub config: SimulationConfig,
}

#[derive(Debug)]
pub enum ScenarioError {
    Read(PathBuf, std::io::Error),
    Parse(PathBuf, serde_json::Error),
    Invalid(String),
    Core(Error),
}

impl std::fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ScenarioError::Read(p, e) => write!(f, "cannot read {}: {e}", p.display()),
            ScenarioError::Parse(p, e) => write!(f, "cannot parse {}: {e}", p.display()),
            ScenarioError::Invalid(m) => f.write_str(m),
            ScenarioError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for ScenarioError {
    fn from(e: Error) -> Self {
        ScenarioError::Core(e)
    }
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::Read(path.to_path_buf(), e))?;
        let file: ScenarioFile =
            serde_json::from_str(&text).map_err(|e| ScenarioError::Parse(path.to_path_buf(), e))?;
        Self::resolve(file, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn resolve(file: ScenarioFile, base: &Path) -> Result<Self, ScenarioError> {
        let region = match &file.region {
            RegionSpec::Rectangle { min, max } => ConvexPolygon::rectangle(*min, *max)?,
            RegionSpec::Polygon { vertices } => ConvexPolygon::new(vertices.clone())?,
        };
        let density = file.density.load(base)?;
        let config = SimulationConfig {
            dt: file.simulation.dt,
            gain: file.simulation.k,
            max_steps: file.simulation.max_steps,
            convergence_eps: file.simulation.convergence_eps,
            cost_record_stride: file.output.stride,
            seed: file.simulation.seed,
            fov_radius: file.sensor.fov_radius,
        };
        config.validate()?;
        if file.agents.count < 2 {
            return Err(Error::TooFewAgents(file.agents.count).into());
        }
        let scenario = Self {
            file,
            region,
            density,
            config,
        };
        if scenario.file.agents.init == InitMode::Explicit {
            scenario.initial_configuration()?;
        }
        Ok(scenario)
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        if let Some(s) = seed {
            self.config.seed = s;
            self.file.simulation.seed = s;
        }
        self
    }

    pub fn agent_count(&self) -> usize {
        self.file.agents.count
    }

    pub fn initial_configuration(&self) -> Result<AgentConfiguration, ScenarioError> {
        let n = self.agent_count();
        Ok(match self.file.agents.init {
            InitMode::Random => random_configuration(n, &self.region, self.config.seed)?,
            InitMode::Grid => grid_configuration(n, &self.region)?,
            InitMode::Explicit => {
                let ps = self.file.agents.positions.clone().ok_or_else(|| {
                    ScenarioError::Invalid("agents.init = explicit requires agents.positions".into())
                })?;
                if ps.len() != n {
                    return Err(ScenarioError::Invalid(format!(
                        "agents.count = {n} but {} positions given",
                        ps.len()
                    )));
                }
                AgentConfiguration::new(ps, &self.region)?
            }
        })
    }
}

impl DensitySpec {
    fn load(&self, base: &Path) -> Result<GaussianMixtureDensity, ScenarioError> {
        let density = match (&self.components, &self.path) {
            (Some(cs), None) => GaussianMixtureDensity::with_default_floor(cs.clone())?,
            (None, Some(p)) => {
                let full = if p.is_absolute() { p.clone() } else { base.join(p) };
                let text = std::fs::read_to_string(&full).map_err(|e| ScenarioError::Read(full.clone(), e))?;
                serde_json::from_str(&text).map_err(|e| ScenarioError::Parse(full.clone(), e))?
            }
            _ => {
                return Err(ScenarioError::Invalid(
                    "density needs exactly one of `components` or `path`".into(),
                ))
            }
        };
        Ok(match self.floor {
            Some(f) => density.with_floor(f)?,
            None => density,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "region": {"rectangle": {"min": [0, 0], "max": [1.5, 1.5]}},
        "density": {"components": [{"amplitude": 1, "center": [0.9, 0.7], "sigma": 0.3}]},
        "agents": {"count": 9, "init": "random"},
        "sensor": {"fov_radius": 0.5}
    }"#;

    #[test]
    fn minimal_scenario_uses_defaults() {
        let file: ScenarioFile = serde_json::from_str(MINIMAL).unwrap();
        let s = Scenario::resolve(file, Path::new(".")).unwrap();
        assert_eq!(s.config.dt, 0.05);
        assert_eq!(s.config.cost_record_stride, 1);
        assert!((s.density.floor() - 1e-3).abs() < 1e-15);
        assert_eq!(s.initial_configuration().unwrap().len(), 9);
    }

    #[test]
    fn unknown_keys_rejected() {
        let bad = MINIMAL.replace("\"sensor\"", "\"sensr\"");
        assert!(serde_json::from_str::<ScenarioFile>(&bad).is_err());
        let bad = MINIMAL.replace("\"fov_radius\": 0.5", "\"fov_radius\": 0.5, \"zoom\": 2");
        assert!(serde_json::from_str::<ScenarioFile>(&bad).is_err());
    }

    #[test]
    fn explicit_positions_checked() {
        let text = MINIMAL.replace(
            "\"count\": 9, \"init\": \"random\"",
            "\"count\": 3, \"init\": \"explicit\", \"positions\": [[0.1, 0.1], [0.5, 0.5]]",
        );
        let file: ScenarioFile = serde_json::from_str(&text).unwrap();
        assert!(matches!(Scenario::resolve(file, Path::new(".")), Err(ScenarioError::Invalid(_))));
    }
}
