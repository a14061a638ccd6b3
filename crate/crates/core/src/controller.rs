//! Additive-centroid controller `u_i = -k (p_i - C̄_i)` and finite-difference
//! gradient oracles for the composite costs.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::{auxiliary_cost, photogrammetry_cost};
use crate::density::Density;
use crate::error::{Error, Result};
use crate::geometry::{local_cells, order_two_voronoi, ConvexPolygon, OrderTwoPartition, PairKey, Point2};
use crate::quadrature::{cell_statistics, CellStatistics, QuadratureSpec, MASS_FLOOR};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlInput {
    pub u: Point2,
}

impl ControlInput {
    pub fn norm(&self) -> f64 {
        self.u.norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerParams {
    pub gain: f64,
    pub mass_floor: f64,
}

impl Default for ControllerParams {
    fn default() -> Self {
        Self {
            gain: 1.0,
            mass_floor: MASS_FLOOR,
        }
    }
}

impl ControllerParams {
    pub fn new(gain: f64) -> Result<Self> {
        let p = Self {
            gain,
            ..Self::default()
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gain > 0.0 && self.gain.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "gain must be positive, got {}",
                self.gain
            )));
        }
        if !(self.mass_floor >= 0.0) {
            return Err(Error::InvalidParameter("mass floor must be non-negative".into()));
        }
        Ok(())
    }
}

/// Per-cell mass, first moment and auxiliary cost of a partition.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionStatistics {
    cells: BTreeMap<PairKey, CellStatistics>,
}

impl PartitionStatistics {
    pub fn compute<D: Density + ?Sized>(
        agents: &[Point2],
        partition: &OrderTwoPartition,
        density: &D,
        spec: &QuadratureSpec,
    ) -> Self {
        Self::from_cells(agents, partition.nonempty_cells().collect(), density, spec)
    }

    fn from_cells<D: Density + ?Sized>(
        agents: &[Point2],
        cells: Vec<(PairKey, &ConvexPolygon)>,
        density: &D,
        spec: &QuadratureSpec,
    ) -> Self {
        let stats: Vec<CellStatistics> = cells
            .par_iter()
            .map(|(k, c)| cell_statistics(c, density, agents[k.i], agents[k.j], spec))
            .collect();
        Self {
            cells: cells.iter().map(|(k, _)| *k).zip(stats).collect(),
        }
    }

    pub fn cells(&self) -> &BTreeMap<PairKey, CellStatistics> {
        &self.cells
    }

    pub fn auxiliary_cost(&self) -> f64 {
        self.cells.values().map(|s| s.auxiliary_cost).sum()
    }

    /// Total mass `Σ M` and mass-weighted moment `Σ C M` over the cells of `agent`.
    pub fn agent_moments(&self, agent: usize) -> (f64, Point2) {
        self.cells
            .iter()
            .filter(|(k, _)| k.contains(agent))
            .fold((0.0, Point2::ZERO), |(m, c), (_, s)| {
                (m + s.moments.mass, c + s.moments.first_moment)
            })
    }

    /// `C̄_i = Σ C M / Σ M` over the cells of `agent`.
    pub fn additive_centroid(&self, agent: usize, mass_floor: f64) -> Result<Point2> {
        let (mass, moment) = self.agent_moments(agent);
        if !(mass > mass_floor) {
            return Err(Error::MasslessAgent(agent));
        }
        Ok(moment * (1.0 / mass))
    }

    /// `∂H_g/∂p_i = 2 (Σ M) (p_i - C̄_i)`.
    pub fn auxiliary_gradient(&self, agent: usize, position: Point2) -> Point2 {
        let (mass, moment) = self.agent_moments(agent);
        (position * mass - moment) * 2.0
    }

    /// Control input, zero for a massless agent.
    pub fn control_input(&self, agent: usize, position: Point2, params: &ControllerParams) -> ControlInput {
        match self.additive_centroid(agent, params.mass_floor) {
            Ok(c) => ControlInput {
                u: (position - c) * -params.gain,
            },
            Err(_) => ControlInput::default(),
        }
    }
}

pub fn additive_centroid<D: Density + ?Sized>(
    agent: usize,
    agents: &[Point2],
    partition: &OrderTwoPartition,
    density: &D,
    spec: &QuadratureSpec,
) -> Result<Point2> {
    let cells = partition.cells_of(agent).collect();
    PartitionStatistics::from_cells(agents, cells, density, spec).additive_centroid(agent, MASS_FLOOR)
}

/// `u_i = -k (p_i - C̄_i)` for one agent.
pub fn control_input<D: Density + ?Sized>(
    agent: usize,
    agents: &[Point2],
    region: &ConvexPolygon,
    density: &D,
    params: &ControllerParams,
    spec: &QuadratureSpec,
) -> Result<ControlInput> {
    params.validate()?;
    let partition = order_two_voronoi(agents, region)?;
    let cells = partition.cells_of(agent).collect();
    let stats = PartitionStatistics::from_cells(agents, cells, density, spec);
    Ok(stats.control_input(agent, agents[agent], params))
}

/// Inputs for every agent from one shared partition.
pub fn control_inputs<D: Density + ?Sized>(
    agents: &[Point2],
    region: &ConvexPolygon,
    density: &D,
    params: &ControllerParams,
    spec: &QuadratureSpec,
) -> Result<Vec<ControlInput>> {
    params.validate()?;
    let partition = order_two_voronoi(agents, region)?;
    let stats = PartitionStatistics::compute(agents, &partition, density, spec);
    Ok((0..agents.len())
        .map(|i| stats.control_input(i, agents[i], params))
        .collect())
}

/// Input of `agent` computed from the positions in `known` only.
pub fn local_control_input<D: Density + ?Sized>(
    agent: usize,
    agents: &[Point2],
    known: &BTreeSet<usize>,
    region: &ConvexPolygon,
    density: &D,
    params: &ControllerParams,
    spec: &QuadratureSpec,
) -> Result<ControlInput> {
    params.validate()?;
    let cells = local_cells(agent, agents, known, region)?;
    let refs = cells.iter().map(|(k, c)| (*k, c)).collect();
    let stats = PartitionStatistics::from_cells(agents, refs, density, spec);
    Ok(stats.control_input(agent, agents[agent], params))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CostKind {
    Auxiliary,
    Photogrammetry { fov_radius: f64 },
}

impl CostKind {
    pub fn evaluate<D: Density + ?Sized>(
        &self,
        agents: &[Point2],
        region: &ConvexPolygon,
        density: &D,
        spec: &QuadratureSpec,
    ) -> Result<f64> {
        match *self {
            CostKind::Auxiliary => auxiliary_cost(agents, region, density, spec),
            CostKind::Photogrammetry { fov_radius } => {
                photogrammetry_cost(agents, region, density, fov_radius, spec)
            }
        }
    }
}

/// Default finite-difference step: `1e-5 · diam Q`.
pub fn default_fd_step(region: &ConvexPolygon) -> Result<f64> {
    Ok(1e-5 * region.diameter()?)
}

/// Central-difference gradient of `P ↦ H(P, V(P)²)` in `p_agent`, rebuilding
/// the partition at every perturbed configuration.
pub fn fd_gradient<D: Density + ?Sized>(
    kind: CostKind,
    agents: &[Point2],
    region: &ConvexPolygon,
    density: &D,
    agent: usize,
    step: f64,
    spec: &QuadratureSpec,
) -> Result<Point2> {
    if !(step > 0.0) {
        return Err(Error::InvalidParameter(format!("fd step must be positive, got {step}")));
    }
    let mut grad = [0.0; 2];
    for (axis, g) in grad.iter_mut().enumerate() {
        let e = if axis == 0 {
            Point2::new(step, 0.0)
        } else {
            Point2::new(0.0, step)
        };
        let mut values = [0.0; 2];
        for (v, sign) in values.iter_mut().zip([1.0, -1.0]) {
            let mut moved = agents.to_vec();
            moved[agent] = agents[agent] + e * sign;
            if !region.contains(moved[agent], 0.0) {
                return Err(Error::StepExitsRegion(agent));
            }
            *v = kind.evaluate(&moved, region, density, spec)?;
        }
        *g = (values[0] - values[1]) / (2.0 * step);
    }
    Ok(Point2::new(grad[0], grad[1]))
}
