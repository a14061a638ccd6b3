//! Explicit Euler integration of `ṗ_i = u_i` with trace recording.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::controller::{ControllerParams, PartitionStatistics};
use crate::cost::{partition_cost, SensorModel};
use crate::density::Density;
use crate::error::{Error, Result};
use crate::geometry::{order_two_voronoi, ConvexPolygon, Point2, CONTAINMENT_TOL, DEGENERACY_FLOOR};
use crate::quadrature::QuadratureSpec;

/// Ordered agent positions, all inside the region and pairwise distinct.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentConfiguration(Vec<Point2>);

impl AgentConfiguration {
    pub fn new(positions: Vec<Point2>, region: &ConvexPolygon) -> Result<Self> {
        if region.is_empty() {
            return Err(Error::EmptyRegion);
        }
        for (k, p) in positions.iter().enumerate() {
            if !p.is_finite() {
                return Err(Error::NonFinite);
            }
            if !region.contains(*p, CONTAINMENT_TOL) {
                return Err(Error::AgentOutsideRegion(k));
            }
        }
        if let Some((a, b)) = closest_violation(&positions) {
            return Err(Error::DegenerateConfiguration(a, b));
        }
        Ok(Self(positions))
    }

    pub fn positions(&self) -> &[Point2] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<Point2> {
        self.0
    }
}

fn closest_violation(positions: &[Point2]) -> Option<(usize, usize)> {
    for a in 0..positions.len() {
        for b in a + 1..positions.len() {
            if positions[a].distance(positions[b]) <= DEGENERACY_FLOOR {
                return Some((a, b));
            }
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    /// Seconds.
    pub dt: f64,
    pub gain: f64,
    pub max_steps: usize,
    /// Meters per second.
    pub convergence_eps: f64,
    pub cost_record_stride: usize,
    pub seed: u64,
    /// FOV radius used for the recorded photogrammetry cost.
    pub fov_radius: f64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            dt: 0.05,
            gain: 1.0,
            max_steps: 5000,
            convergence_eps: 1e-4,
            cost_record_stride: 1,
            seed: 0,
            fov_radius: 0.5,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.dt) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        if !positive(self.gain) {
            return Err(Error::InvalidParameter(format!("gain must be positive, got {}", self.gain)));
        }
        if self.dt * self.gain >= 1.0 {
            return Err(Error::UnstableStep(self.dt * self.gain));
        }
        if !positive(self.convergence_eps) {
            return Err(Error::InvalidParameter("convergence_eps must be positive".into()));
        }
        if self.cost_record_stride == 0 {
            return Err(Error::InvalidParameter("cost_record_stride must be >= 1".into()));
        }
        if !positive(self.fov_radius) {
            return Err(Error::InvalidParameter("fov_radius must be positive".into()));
        }
        Ok(())
    }

    fn controller(&self) -> ControllerParams {
        ControllerParams {
            gain: self.gain,
            ..ControllerParams::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: usize,
    pub time: f64,
    pub positions: Vec<Point2>,
    pub u_norms: Vec<f64>,
    pub max_u: f64,
    pub h_g: f64,
    pub h_h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationTrace {
    pub records: Vec<TraceRecord>,
    pub converged: bool,
    pub steps: usize,
}

impl SimulationTrace {
    pub fn initial(&self) -> &TraceRecord {
        &self.records[0]
    }

    pub fn last(&self) -> &TraceRecord {
        self.records.last().expect("a trace always holds its initial record")
    }

    pub fn final_positions(&self) -> &[Point2] {
        &self.last().positions
    }

    /// Largest increase of `H_g` between consecutive records (0 when monotone).
    pub fn max_auxiliary_increase(&self) -> f64 {
        self.records
            .windows(2)
            .map(|w| w[1].h_g - w[0].h_g)
            .fold(0.0, f64::max)
    }
}

/// Applies precomputed inputs: Euler step, projection into the region, degeneracy check.
fn advance(positions: &[Point2], inputs: &[Point2], region: &ConvexPolygon, dt: f64) -> Result<Vec<Point2>> {
    let next: Vec<Point2> = positions
        .iter()
        .zip(inputs)
        .map(|(&p, &u)| {
            let q = p + u * dt;
            if region.contains(q, 0.0) {
                q
            } else {
                region.project(q)
            }
        })
        .collect();
    if let Some((a, b)) = closest_violation(&next) {
        return Err(Error::DegenerateStep(a, b));
    }
    Ok(next)
}

fn inputs<D: Density + ?Sized>(
    positions: &[Point2],
    region: &ConvexPolygon,
    density: &D,
    config: &SimulationConfig,
    spec: &QuadratureSpec,
) -> Result<(Vec<Point2>, f64, crate::geometry::OrderTwoPartition)> {
    let partition = order_two_voronoi(positions, region)?;
    let stats = PartitionStatistics::compute(positions, &partition, density, spec);
    let params = config.controller();
    let u = (0..positions.len())
        .map(|i| stats.control_input(i, positions[i], &params).u)
        .collect();
    Ok((u, stats.auxiliary_cost(), partition))
}

/// One synchronous update of every agent.
pub fn step<D: Density + ?Sized>(
    config_now: &AgentConfiguration,
    region: &ConvexPolygon,
    density: &D,
    config: &SimulationConfig,
    spec: &QuadratureSpec,
) -> Result<AgentConfiguration> {
    config.validate()?;
    spec.validate()?;
    let (u, _, _) = inputs(config_now.positions(), region, density, config, spec)?;
    Ok(AgentConfiguration(advance(config_now.positions(), &u, region, config.dt)?))
}

/// Iterates [`step`] until `max ‖u_i‖ < convergence_eps` or `max_steps`.
///
/// Convergence is tested before each step, so an equilibrium start converges
/// with zero steps. The initial and final configurations are always recorded.
pub fn run<D: Density + ?Sized>(
    initial: &AgentConfiguration,
    region: &ConvexPolygon,
    density: &D,
    config: &SimulationConfig,
    spec: &QuadratureSpec,
) -> Result<SimulationTrace> {
    config.validate()?;
    spec.validate()?;
    let sensor = SensorModel::photogrammetry_for(region, config.fov_radius)?;
    let mut positions = initial.positions().to_vec();
    let mut records = Vec::new();
    let mut k = 0;
    loop {
        let (u, h_g, partition) = inputs(&positions, region, density, config, spec)?;
        let u_norms: Vec<f64> = u.iter().map(|u| u.norm()).collect();
        let max_u = u_norms.iter().copied().fold(0.0, f64::max);
        let converged = max_u < config.convergence_eps;
        let terminal = converged || k >= config.max_steps;
        if terminal || k % config.cost_record_stride == 0 {
            let h_h = partition_cost(&positions, &partition, density, &sensor, spec)?;
            records.push(TraceRecord {
                step: k,
                time: k as f64 * config.dt,
                positions: positions.clone(),
                u_norms,
                max_u,
                h_g,
                h_h,
            });
        }
        if terminal {
            return Ok(SimulationTrace {
                records,
                converged,
                steps: k,
            });
        }
        positions = advance(&positions, &u, region, config.dt)?;
        k += 1;
    }
}

/// Uniform rejection sampling inside the region; deterministic per seed.
pub fn random_configuration(n: usize, region: &ConvexPolygon, seed: u64) -> Result<AgentConfiguration> {
    if n < 2 {
        return Err(Error::TooFewAgents(n));
    }
    let (lo, hi) = region.bounding_box().ok_or(Error::EmptyRegion)?;
    if !(region.area() > 0.0) {
        return Err(Error::EmptyRegion);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<Point2> = Vec::with_capacity(n);
    while out.len() < n {
        let q = Point2::new(rng.gen_range(lo.x..hi.x), rng.gen_range(lo.y..hi.y));
        if region.contains(q, 0.0) && out.iter().all(|p| p.distance(q) > DEGENERACY_FLOOR) {
            out.push(q);
        }
    }
    Ok(AgentConfiguration(out))
}

/// Cell centers of a `⌈√n⌉ × ⌈n/⌈√n⌉⌉` lattice over a rectangle, filled row by
/// row from the bottom; a partial top row is centered.
pub fn grid_configuration(n: usize, region: &ConvexPolygon) -> Result<AgentConfiguration> {
    let (lo, hi) = region.as_rectangle().ok_or(Error::GridRequiresRectangle)?;
    if n == 0 {
        return Err(Error::TooFewAgents(0));
    }
    let rows = (n as f64).sqrt().ceil() as usize;
    let cols = n.div_ceil(rows);
    let (w, h) = ((hi.x - lo.x) / cols as f64, (hi.y - lo.y) / rows as f64);
    let mut out = Vec::with_capacity(n);
    for r in 0..rows {
        let in_row = (n - r * cols).min(cols);
        let shift = (cols - in_row) as f64 / 2.0;
        for c in 0..in_row {
            out.push(Point2::new(
                lo.x + (c as f64 + 0.5 + shift) * w,
                lo.y + (r as f64 + 0.5) * h,
            ));
        }
    }
    Ok(AgentConfiguration(out))
}

/// `step,time,agent,x,y,u_norm`, one row per agent per record.
pub fn write_trace_csv<W: Write>(writer: W, trace: &SimulationTrace) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["step", "time", "agent", "x", "y", "u_norm"])?;
    for rec in &trace.records {
        for (a, (p, u)) in rec.positions.iter().zip(&rec.u_norms).enumerate() {
            w.write_record([
                rec.step.to_string(),
                rec.time.to_string(),
                a.to_string(),
                p.x.to_string(),
                p.y.to_string(),
                u.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `step,time,H_g,H_h,max_u`, one row per record.
pub fn write_summary_csv<W: Write>(writer: W, trace: &SimulationTrace) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["step", "time", "H_g", "H_h", "max_u"])?;
    for rec in &trace.records {
        w.write_record([
            rec.step.to_string(),
            rec.time.to_string(),
            rec.h_g.to_string(),
            rec.h_h.to_string(),
            rec.max_u.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
