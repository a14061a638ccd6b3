//! Brute-force grid oracles, the baseline comparison harness and the
//! randomized verification suites.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::controller::{fd_gradient, CostKind, PartitionStatistics};
use crate::cost::{bound_factors, both_costs, check_sensor_model, BoundFactors, ConditionReport, SensorModel};
use crate::density::{Density, GaussianComponent, GaussianMixtureDensity};
use crate::error::{Error, Result};
use crate::geometry::{order_two_voronoi, validate_configuration, ConvexPolygon, Point2};
use crate::quadrature::QuadratureSpec;
use crate::simulator::{grid_configuration, random_configuration, run, AgentConfiguration, SimulationConfig};

/// Relative slack on `H_g <= H_h`; both sides carry independent quadrature error.
pub const LOWER_BOUND_SLACK: f64 = 1e-6;
/// Relative slack on `H_h <= H_g / β²`.
pub const UPPER_BOUND_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridOracleSpec {
    /// Samples per axis of the bounding box.
    pub resolution: usize,
    pub seed: u64,
}

impl GridOracleSpec {
    pub fn new(resolution: usize, seed: u64) -> Result<Self> {
        let s = Self { resolution, seed };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.resolution < 64 {
            return Err(Error::InvalidParameter(format!(
                "oracle resolution must be >= 64, got {}",
                self.resolution
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationMode {
    /// Reassign to a uniformly chosen non-optimal pair.
    Random,
    /// Reassign to the pair with the largest integrand.
    Adversarial,
}

/// The two nearest agents of `q`, ties broken toward lower indices.
fn nearest_two(agents: &[Point2], q: Point2) -> (usize, usize, f64, f64) {
    let (mut a, mut da) = (usize::MAX, f64::INFINITY);
    let (mut b, mut db) = (usize::MAX, f64::INFINITY);
    for (k, p) in agents.iter().enumerate() {
        let d = q.distance(*p);
        if d < da {
            (b, db) = (a, da);
            (a, da) = (k, d);
        } else if d < db {
            (b, db) = (k, d);
        }
    }
    (a, b, da, db)
}

/// Midpoint grid sum of `f φ` where `pick` returns the integrand assigned to
/// a sample, given the sample and its row RNG.
fn grid_sum<D, P>(
    agents: &[Point2],
    region: &ConvexPolygon,
    density: &D,
    grid: &GridOracleSpec,
    pick: P,
) -> Result<f64>
where
    D: Density + ?Sized,
    P: Fn(Point2, &mut ChaCha8Rng) -> f64 + Sync,
{
    grid.validate()?;
    validate_configuration(agents, region)?;
    let (lo, hi) = region.bounding_box().ok_or(Error::EmptyRegion)?;
    let n = grid.resolution;
    let (hx, hy) = ((hi.x - lo.x) / n as f64, (hi.y - lo.y) / n as f64);
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(grid.seed);
            rng.set_stream(r as u64);
            let y = lo.y + (r as f64 + 0.5) * hy;
            let mut acc = 0.0;
            for c in 0..n {
                let q = Point2::new(lo.x + (c as f64 + 0.5) * hx, y);
                if !region.contains(q, 0.0) {
                    continue;
                }
                acc += pick(q, &mut rng) * density.eval(q);
            }
            acc
        })
        .collect();
    Ok(rows.iter().sum::<f64>() * hx * hy)
}

/// Exhaustive nearest-two assignment over a `resolution²` midpoint grid.
pub fn oracle_cost<D: Density + ?Sized>(
    agents: &[Point2],
    region: &ConvexPolygon,
    density: &D,
    sensor: &SensorModel,
    grid: &GridOracleSpec,
) -> Result<f64> {
    oracle_perturbed_partition_cost(agents, region, density, sensor, 0.0, PerturbationMode::Random, grid)
}

/// Grid cost of a partition in which a `swap_fraction` of the samples are
/// moved off their nearest pair.
pub fn oracle_perturbed_partition_cost<D: Density + ?Sized>(
    agents: &[Point2],
    region: &ConvexPolygon,
    density: &D,
    sensor: &SensorModel,
    swap_fraction: f64,
    mode: PerturbationMode,
    grid: &GridOracleSpec,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&swap_fraction) {
        return Err(Error::InvalidParameter(format!(
            "swap fraction must lie in [0, 1], got {swap_fraction}"
        )));
    }
    let n = agents.len();
    grid_sum(agents, region, density, grid, |q, rng| {
        let (a, b, da, db) = nearest_two(agents, q);
        let optimal = sensor.eval(da, db);
        if swap_fraction == 0.0 || n < 3 || !(rng.gen::<f64>() < swap_fraction) {
            return optimal;
        }
        match mode {
            PerturbationMode::Random => loop {
                let i = rng.gen_range(0..n);
                let j = rng.gen_range(0..n);
                if i == j || (i.min(j), i.max(j)) == (a.min(b), a.max(b)) {
                    continue;
                }
                break sensor.eval(q.distance(agents[i]), q.distance(agents[j]));
            },
            PerturbationMode::Adversarial => {
                let mut worst = f64::NEG_INFINITY;
                for i in 0..n {
                    for j in i + 1..n {
                        worst = worst.max(sensor.eval(q.distance(agents[i]), q.distance(agents[j])));
                    }
                }
                worst
            }
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfigurationKind {
    Random,
    Grid,
    Coverage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigurationEntry {
    pub kind: ConfigurationKind,
    pub positions: Vec<Point2>,
    pub h_h: f64,
    pub h_g: f64,
    pub empty_cells: usize,
    /// `Some` only for the coverage entry.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
}

impl ConfigurationEntry {
    pub fn bounds_hold(&self, factors: &BoundFactors) -> bool {
        lemma2_holds(self.h_g, self.h_h, factors)
    }
}

pub fn lemma2_holds(h_g: f64, h_h: f64, factors: &BoundFactors) -> bool {
    h_g <= h_h * (1.0 + LOWER_BOUND_SLACK) && h_h <= factors.upper_factor * h_g * (1.0 + UPPER_BOUND_SLACK)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub agent_count: usize,
    pub fov_radius: f64,
    pub region_diameter: f64,
    pub region: ConvexPolygon,
    pub simulation: SimulationConfig,
    pub quadrature: QuadratureSpec,
    pub bounds: BoundFactors,
    pub grid_layout: String,
    pub entries: Vec<ConfigurationEntry>,
    pub lemma2_pass: bool,
}

impl ComparisonReport {
    pub fn entry(&self, kind: ConfigurationKind) -> &ConfigurationEntry {
        self.entries
            .iter()
            .find(|e| e.kind == kind)
            .expect("reports hold every configuration kind")
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn entry<D: Density + ?Sized>(
    kind: ConfigurationKind,
    positions: &[Point2],
    region: &ConvexPolygon,
    density: &D,
    fov_radius: f64,
    spec: &QuadratureSpec,
) -> Result<ConfigurationEntry> {
    let partition = order_two_voronoi(positions, region)?;
    let costs = both_costs(positions, &partition, density, fov_radius, spec)?;
    Ok(ConfigurationEntry {
        kind,
        positions: positions.to_vec(),
        h_h: costs.h_h,
        h_g: costs.h_g,
        empty_cells: partition.empty_count(),
        converged: None,
        steps: None,
    })
}

/// Costs of a seeded random start, the grid baseline, and the controller's
/// final configuration from that same random start.
pub fn compare_configurations<D: Density + ?Sized>(
    n: usize,
    region: &ConvexPolygon,
    density: &D,
    fov_radius: f64,
    sim_config: &SimulationConfig,
    spec: &QuadratureSpec,
) -> Result<ComparisonReport> {
    let config = SimulationConfig {
        fov_radius,
        ..*sim_config
    };
    config.validate()?;
    let diameter = region.diameter()?;
    let bounds = bound_factors(fov_radius, diameter)?;
    let start = random_configuration(n, region, config.seed)?;
    let grid = grid_configuration(n, region)?;
    let trace = run(&start, region, density, &config, spec)?;

    let mut coverage = entry(ConfigurationKind::Coverage, trace.final_positions(), region, density, fov_radius, spec)?;
    coverage.converged = Some(trace.converged);
    coverage.steps = Some(trace.steps);
    let entries = vec![
        entry(ConfigurationKind::Random, start.positions(), region, density, fov_radius, spec)?,
        entry(ConfigurationKind::Grid, grid.positions(), region, density, fov_radius, spec)?,
        coverage,
    ];
    let lemma2_pass = entries.iter().all(|e| e.bounds_hold(&bounds));
    let rows = (n as f64).sqrt().ceil() as usize;
    Ok(ComparisonReport {
        agent_count: n,
        fov_radius,
        region_diameter: diameter,
        region: region.clone(),
        simulation: config,
        quadrature: *spec,
        bounds,
        grid_layout: format!(
            "cell centers of a {rows} x {} lattice, partial top row centered",
            n.div_ceil(rows)
        ),
        entries,
        lemma2_pass,
    })
}

/// Random mixture with `k` peaks centered inside `region`, default floor.
pub fn random_mixture(region: &ConvexPolygon, k: usize, rng: &mut impl Rng) -> Result<GaussianMixtureDensity> {
    let (lo, hi) = region.bounding_box().ok_or(Error::EmptyRegion)?;
    let scale = (hi - lo).norm();
    let mut components = Vec::with_capacity(k);
    while components.len() < k {
        let c = Point2::new(rng.gen_range(lo.x..hi.x), rng.gen_range(lo.y..hi.y));
        if !region.contains(c, 0.0) {
            continue;
        }
        components.push(GaussianComponent::new(
            rng.gen_range(0.5..2.0),
            c,
            scale * rng.gen_range(0.05..0.25),
        )?);
    }
    GaussianMixtureDensity::with_default_floor(components)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Bounds,
    Lemma1,
    Gradient,
    Conditions,
}

/// A failing instance, serialized for replay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteViolation {
    pub trial: usize,
    pub positions: Vec<Point2>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub density: Option<GaussianMixtureDensity>,
    pub detail: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub trials: usize,
    pub seed: u64,
    pub passed: bool,
    /// Suite-specific worst-case figures.
    pub margins: serde_json::Map<String, serde_json::Value>,
    pub violations: Vec<SuiteViolation>,
}

/// Setup shared by the suites: the 1.5 m square with `r = 0.5`.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteSetup {
    pub region: ConvexPolygon,
    pub fov_radius: f64,
    pub spec: QuadratureSpec,
}

impl Default for SuiteSetup {
    fn default() -> Self {
        Self {
            region: ConvexPolygon::square(1.5).expect("valid square"),
            fov_radius: 0.5,
            spec: QuadratureSpec::default(),
        }
    }
}

fn trial_instance(
    setup: &SuiteSetup,
    rng: &mut ChaCha8Rng,
    n_range: std::ops::RangeInclusive<usize>,
) -> Result<(AgentConfiguration, GaussianMixtureDensity)> {
    let n = rng.gen_range(n_range);
    let k = rng.gen_range(1..=3);
    let density = random_mixture(&setup.region, k, rng)?;
    let agents = random_configuration(n, &setup.region, rng.gen())?;
    Ok((agents, density))
}

fn margins(pairs: &[(&str, f64)]) -> serde_json::Map<String, serde_json::Value> {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), serde_json::json!(v)))
        .collect()
}

/// `H_g <= H_h <= H_g / β²` over random configurations with `n ∈ 3..=12`.
pub fn verify_bounds(setup: &SuiteSetup, trials: usize, seed: u64) -> Result<SuiteReport> {
    let factors = bound_factors(setup.fov_radius, setup.region.diameter()?)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut max_ratio, mut min_ratio) = (0.0f64, f64::INFINITY);
    let mut violations = Vec::new();
    for trial in 0..trials {
        let (agents, density) = trial_instance(setup, &mut rng, 3..=12)?;
        let partition = order_two_voronoi(agents.positions(), &setup.region)?;
        let c = both_costs(agents.positions(), &partition, &density, setup.fov_radius, &setup.spec)?;
        let ratio = c.h_h / c.h_g;
        max_ratio = max_ratio.max(ratio);
        min_ratio = min_ratio.min(ratio);
        if !lemma2_holds(c.h_g, c.h_h, &factors) {
            violations.push(SuiteViolation {
                trial,
                positions: agents.positions().to_vec(),
                density: Some(density),
                detail: serde_json::json!({ "h_g": c.h_g, "h_h": c.h_h, "ratio": ratio }),
            });
        }
    }
    Ok(SuiteReport {
        suite: Suite::Bounds,
        trials,
        seed,
        passed: violations.is_empty(),
        margins: margins(&[
            ("max_ratio", max_ratio),
            ("min_ratio", min_ratio),
            ("upper_factor", factors.upper_factor),
        ]),
        violations,
    })
}

/// Perturbed grid partitions never beat the nearest-two assignment.
pub fn verify_lemma1(
    setup: &SuiteSetup,
    trials: usize,
    perturbations: usize,
    resolution: usize,
    seed: u64,
) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_gap = f64::INFINITY;
    let mut violations = Vec::new();
    let sensors = [
        SensorModel::Auxiliary,
        SensorModel::photogrammetry_for(&setup.region, setup.fov_radius)?,
    ];
    for trial in 0..trials {
        let (agents, density) = trial_instance(setup, &mut rng, 3..=12)?;
        let sensor = &sensors[trial % 2];
        let grid = GridOracleSpec::new(resolution, rng.gen())?;
        let optimal = oracle_cost(agents.positions(), &setup.region, &density, sensor, &grid)?;
        for p in 0..perturbations {
            let g = GridOracleSpec::new(resolution, rng.gen())?;
            let fraction = rng.gen_range(0.05..=1.0);
            let mode = if p + 1 == perturbations {
                PerturbationMode::Adversarial
            } else {
                PerturbationMode::Random
            };
            let perturbed =
                oracle_perturbed_partition_cost(agents.positions(), &setup.region, &density, sensor, fraction, mode, &g)?;
            min_gap = min_gap.min(perturbed - optimal);
            if perturbed < optimal {
                violations.push(SuiteViolation {
                    trial,
                    positions: agents.positions().to_vec(),
                    density: Some(density.clone()),
                    detail: serde_json::json!({
                        "sensor": sensor, "optimal": optimal, "perturbed": perturbed,
                        "swap_fraction": fraction, "grid_seed": g.seed,
                    }),
                });
            }
        }
    }
    Ok(SuiteReport {
        suite: Suite::Lemma1,
        trials,
        seed,
        passed: violations.is_empty(),
        margins: margins(&[("min_gap", min_gap)]),
        violations,
    })
}

/// Comparison of one agent's closed-form and central-difference gradient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientCheck {
    pub agent: usize,
    pub closed_form: Point2,
    pub finite_difference: Point2,
    pub angle: f64,
    pub magnitude_error: f64,
}

/// Checks `∂H_g/∂p_i = 2 M_i (p_i - C̄_i)` for every agent.
pub fn gradient_checks<D: Density + ?Sized>(
    agents: &[Point2],
    region: &ConvexPolygon,
    density: &D,
    spec: &QuadratureSpec,
) -> Result<Vec<GradientCheck>> {
    let partition = order_two_voronoi(agents, region)?;
    let stats = PartitionStatistics::compute(agents, &partition, density, spec);
    let step = 1e-5 * region.diameter()?;
    (0..agents.len())
        .into_par_iter()
        .map(|i| {
            let closed = stats.auxiliary_gradient(i, agents[i]);
            let fd = fd_gradient(CostKind::Auxiliary, agents, region, density, i, step, spec)?;
            let cos = (closed.dot(fd) / (closed.norm() * fd.norm())).clamp(-1.0, 1.0);
            Ok(GradientCheck {
                agent: i,
                closed_form: closed,
                finite_difference: fd,
                angle: cos.acos(),
                magnitude_error: (fd.norm() - closed.norm()).abs() / closed.norm(),
            })
        })
        .collect()
}

/// Random configuration whose agents keep `margin` from the boundary and
/// from each other.
pub fn interior_configuration(
    n: usize,
    region: &ConvexPolygon,
    margin: f64,
    rng: &mut impl Rng,
) -> Result<AgentConfiguration> {
    loop {
        let c = random_configuration(n, region, rng.gen())?;
        let p = c.positions();
        let inside = p.iter().all(|q| region.project(*q).distance(*q) == 0.0)
            && p.iter().all(|q| {
                region
                    .half_planes()
                    .iter()
                    .all(|hp| -hp.evaluate(*q) / hp.normal.norm() > margin)
            });
        let apart = (0..n).all(|a| (a + 1..n).all(|b| p[a].distance(p[b]) > margin));
        if inside && apart {
            return Ok(c);
        }
    }
}

pub const GRADIENT_ANGLE_TOL: f64 = 1e-2;
pub const GRADIENT_MAGNITUDE_TOL: f64 = 1e-3;

pub fn verify_gradient(trials: usize, seed: u64) -> Result<SuiteReport> {
    let setup = SuiteSetup {
        spec: QuadratureSpec::precise(),
        ..SuiteSetup::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut worst_angle, mut worst_mag) = (0.0f64, 0.0f64);
    let mut violations = Vec::new();
    for trial in 0..trials {
        let n = rng.gen_range(3..=9);
        let density = random_mixture(&setup.region, rng.gen_range(1..=3), &mut rng)?;
        let agents = interior_configuration(n, &setup.region, 0.02, &mut rng)?;
        for c in gradient_checks(agents.positions(), &setup.region, &density, &setup.spec)? {
            worst_angle = worst_angle.max(c.angle);
            worst_mag = worst_mag.max(c.magnitude_error);
            if !(c.angle < GRADIENT_ANGLE_TOL && c.magnitude_error < GRADIENT_MAGNITUDE_TOL) {
                violations.push(SuiteViolation {
                    trial,
                    positions: agents.positions().to_vec(),
                    density: Some(density.clone()),
                    detail: serde_json::to_value(c)?,
                });
            }
        }
    }
    Ok(SuiteReport {
        suite: Suite::Gradient,
        trials,
        seed,
        passed: violations.is_empty(),
        margins: margins(&[("max_angle", worst_angle), ("max_relative_error", worst_mag)]),
        violations,
    })
}

/// Conditions on the photogrammetry sensor over `[0, 2 diam Q]`.
pub fn verify_conditions(setup: &SuiteSetup, samples: usize, seed: u64) -> Result<(SuiteReport, ConditionReport)> {
    let diameter = setup.region.diameter()?;
    let sensor = SensorModel::photogrammetry(setup.fov_radius, diameter)?;
    let report = check_sensor_model(&sensor, 2.0 * diameter, samples, seed);
    let violations = report
        .first_violation
        .iter()
        .map(|v| SuiteViolation {
            trial: 0,
            positions: Vec::new(),
            density: None,
            detail: serde_json::to_value(v).unwrap_or_default(),
        })
        .collect();
    Ok((
        SuiteReport {
            suite: Suite::Conditions,
            trials: samples,
            seed,
            passed: report.passed(),
            margins: margins(&[
                ("c1_violations", report.c1_violations as f64),
                ("c2_violations", report.c2_violations as f64),
                ("c3_violations", report.c3_violations as f64),
            ]),
            violations,
        },
        report,
    ))
}

/// Scene where the photogrammetry cost is flat in one agent's position while
/// the auxiliary cost is not: agent 0 sits farther than `2r` from a close pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InflectionDemo {
    pub agents: Vec<Point2>,
    pub fov_radius: f64,
    pub photogrammetry_gradient: Point2,
    pub auxiliary_gradient: Point2,
}

pub fn stationary_inflection_demo() -> Result<InflectionDemo> {
    let region = ConvexPolygon::square(1.5)?;
    let agents = vec![Point2::new(0.3, 0.3), Point2::new(1.1, 1.1), Point2::new(1.3, 1.2)];
    let fov_radius = 0.5;
    let density = crate::density::UniformDensity(1.0);
    let spec = QuadratureSpec::precise();
    let step = 1e-5 * region.diameter()?;
    let photo = fd_gradient(
        CostKind::Photogrammetry { fov_radius },
        &agents,
        &region,
        &density,
        0,
        step,
        &spec,
    )?;
    let aux = fd_gradient(CostKind::Auxiliary, &agents, &region, &density, 0, step, &spec)?;
    Ok(InflectionDemo {
        agents,
        fov_radius,
        photogrammetry_gradient: photo,
        auxiliary_gradient: aux,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::{auxiliary_cost, photogrammetry_cost};
    use crate::density::UniformDensity;

    fn square() -> ConvexPolygon {
        ConvexPolygon::square(1.5).unwrap()
    }

    #[test]
    fn zero_density_costs_nothing() {
        let q = square();
        let agents = [Point2::new(0.2, 0.2), Point2::new(1.0, 0.9), Point2::new(0.4, 1.3)];
        let g = GridOracleSpec::new(64, 0).unwrap();
        assert_eq!(oracle_cost(&agents, &q, &UniformDensity(0.0), &SensorModel::Auxiliary, &g).unwrap(), 0.0);
        assert!(GridOracleSpec::new(10, 0).is_err());
    }

    #[test]
    fn oracle_matches_two_agent_cell() {
        let q = square();
        let agents = [Point2::new(0.2, 0.2), Point2::new(1.0, 0.9)];
        let d = UniformDensity(1.0);
        let g = GridOracleSpec::new(400, 0).unwrap();
        let grid = oracle_cost(&agents, &q, &d, &SensorModel::Auxiliary, &g).unwrap();
        let exact = auxiliary_cost(&agents, &q, &d, &QuadratureSpec::default()).unwrap();
        assert!((grid - exact).abs() / exact < 1e-4);
        let h = SensorModel::photogrammetry_for(&q, 0.5).unwrap();
        let grid = oracle_cost(&agents, &q, &d, &h, &g).unwrap();
        let exact = photogrammetry_cost(&agents, &q, &d, 0.5, &QuadratureSpec::default()).unwrap();
        assert!((grid - exact).abs() / exact < 1e-2);
    }

    #[test]
    fn zero_swap_reproduces_the_oracle() {
        let q = square();
        let agents = [Point2::new(0.2, 0.2), Point2::new(1.0, 0.9), Point2::new(0.4, 1.3), Point2::new(1.2, 0.3)];
        let d = GaussianMixtureDensity::single(1.0, Point2::new(0.7, 0.7), 0.3).unwrap();
        let g = GridOracleSpec::new(100, 4).unwrap();
        let s = SensorModel::Auxiliary;
        let base = oracle_cost(&agents, &q, &d, &s, &g).unwrap();
        let zero = oracle_perturbed_partition_cost(&agents, &q, &d, &s, 0.0, PerturbationMode::Random, &g).unwrap();
        assert_eq!(base, zero);
        let mut last = base;
        for f in [0.2, 0.6] {
            let p = oracle_perturbed_partition_cost(&agents, &q, &d, &s, f, PerturbationMode::Random, &g).unwrap();
            assert!(p >= base);
            last = last.max(p);
        }
        let worst = oracle_perturbed_partition_cost(&agents, &q, &d, &s, 1.0, PerturbationMode::Adversarial, &g).unwrap();
        assert!(worst >= last);
        assert!(oracle_perturbed_partition_cost(&agents, &q, &d, &s, 1.5, PerturbationMode::Random, &g).is_err());
    }

    #[test]
    fn small_suites_pass() {
        let setup = SuiteSetup::default();
        assert!(verify_bounds(&setup, 5, 1).unwrap().passed);
        assert!(verify_lemma1(&setup, 2, 3, 80, 2).unwrap().passed);
        assert!(verify_conditions(&setup, 1000, 3).unwrap().0.passed);
        assert!(verify_gradient(1, 4).unwrap().passed);
    }

    #[test]
    fn inflection_scene() {
        let demo = stationary_inflection_demo().unwrap();
        assert!(demo.photogrammetry_gradient.norm() < 1e-6);
        assert!(demo.auxiliary_gradient.norm() > 1e-3);
    }

    #[test]
    fn uniform_pair_comparison() {
        let q = square();
        let cfg = SimulationConfig {
            seed: 3,
            ..SimulationConfig::default()
        };
        let r = compare_configurations(2, &q, &UniformDensity(1.0), 0.5, &cfg, &QuadratureSpec::default()).unwrap();
        assert!(r.lemma2_pass);
        // both agents settle at the region centroid, the minimizer of H_g
        let cov = r.entry(ConfigurationKind::Coverage);
        for p in &cov.positions {
            assert!(p.distance(Point2::new(0.75, 0.75)) < 1e-3);
        }
        assert!(cov.h_g <= r.entry(ConfigurationKind::Grid).h_g);
        assert!(cov.h_g <= r.entry(ConfigurationKind::Random).h_g);
    }
}
