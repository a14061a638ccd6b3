//! Sensor models and second-order coverage costs.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::Density;
use crate::error::{Error, Result};
use crate::geometry::{order_two_voronoi, ConvexPolygon, OrderTwoPartition, PairKey, Point2};
use crate::quadrature::{cell_cost_integral, QuadratureSpec};

/// Relative area mismatch tolerated before a partition is rejected.
pub const PARTITION_AREA_TOL: f64 = 1e-4;

pub fn sensor_g(x: f64, y: f64) -> f64 {
    x * x + y * y
}

/// `g(x, y)` when both distances are within `r`, else `2 (diam Q)²`.
pub fn sensor_h(x: f64, y: f64, r: f64, diameter: f64) -> f64 {
    if x.max(y) <= r {
        sensor_g(x, y)
    } else {
        2.0 * diameter * diameter
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SensorModel {
    Auxiliary,
    Photogrammetry { fov_radius: f64, region_diameter: f64 },
}

impl SensorModel {
    pub fn photogrammetry(fov_radius: f64, region_diameter: f64) -> Result<Self> {
        if !(fov_radius >= 0.0 && fov_radius.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "fov radius must be non-negative, got {fov_radius}"
            )));
        }
        if !(region_diameter > 0.0 && region_diameter.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "region diameter must be positive, got {region_diameter}"
            )));
        }
        Ok(Self::Photogrammetry {
            fov_radius,
            region_diameter,
        })
    }

    /// Photogrammetry sensor whose penalty uses the diameter of `region`.
    pub fn photogrammetry_for(region: &ConvexPolygon, fov_radius: f64) -> Result<Self> {
        Self::photogrammetry(fov_radius, region.diameter()?)
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match *self {
            Self::Auxiliary => sensor_g(x, y),
            Self::Photogrammetry {
                fov_radius,
                region_diameter,
            } => sensor_h(x, y, fov_radius, region_diameter),
        }
    }

    /// Constant paid outside the shared field of view (zero for the auxiliary model).
    pub fn penalty(&self) -> f64 {
        match *self {
            Self::Auxiliary => 0.0,
            Self::Photogrammetry {
                region_diameter, ..
            } => 2.0 * region_diameter * region_diameter,
        }
    }
}

/// `H_f(P, W) = Σ ∫_{W_ij} f(|q - p_i|, |q - p_j|) φ(q) dq`.
pub fn coverage_cost<D: Density + ?Sized>(
    agents: &[Point2],
    region: &ConvexPolygon,
    cells: &BTreeMap<PairKey, ConvexPolygon>,
    density: &D,
    sensor: &SensorModel,
    spec: &QuadratureSpec,
) -> Result<f64> {
    spec.validate()?;
    if let Some(key) = cells.keys().find(|k| k.j >= agents.len()) {
        return Err(Error::InvalidPairKey(key.i, key.j));
    }
    let expected = region.area();
    let actual: f64 = cells.values().map(ConvexPolygon::area).sum();
    if (actual - expected).abs() > PARTITION_AREA_TOL * expected {
        return Err(Error::InvalidPartition { expected, actual });
    }
    let parts: Vec<f64> = cells
        .par_iter()
        .map(|(k, c)| cell_cost_integral(c, density, sensor, agents[k.i], agents[k.j], spec))
        .collect();
    Ok(parts.iter().sum())
}

pub fn partition_cost<D: Density + ?Sized>(
    agents: &[Point2],
    partition: &OrderTwoPartition,
    density: &D,
    sensor: &SensorModel,
    spec: &QuadratureSpec,
) -> Result<f64> {
    coverage_cost(agents, partition.region(), partition.cells(), density, sensor, spec)
}

/// `H_h(P, V(P)²)` with the penalty taken from `diam Q`.
pub fn photogrammetry_cost<D: Density + ?Sized>(
    agents: &[Point2],
    region: &ConvexPolygon,
    density: &D,
    fov_radius: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let sensor = SensorModel::photogrammetry_for(region, fov_radius)?;
    let partition = order_two_voronoi(agents, region)?;
    partition_cost(agents, &partition, density, &sensor, spec)
}

/// `H_g(P, V(P)²)`.
pub fn auxiliary_cost<D: Density + ?Sized>(
    agents: &[Point2],
    region: &ConvexPolygon,
    density: &D,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let partition = order_two_voronoi(agents, region)?;
    partition_cost(agents, &partition, density, &SensorModel::Auxiliary, spec)
}

/// Both costs over one shared partition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostPair {
    pub h_g: f64,
    pub h_h: f64,
}

pub fn both_costs<D: Density + ?Sized>(
    agents: &[Point2],
    partition: &OrderTwoPartition,
    density: &D,
    fov_radius: f64,
    spec: &QuadratureSpec,
) -> Result<CostPair> {
    let sensor = SensorModel::photogrammetry_for(partition.region(), fov_radius)?;
    Ok(CostPair {
        h_g: partition_cost(agents, partition, density, &SensorModel::Auxiliary, spec)?,
        h_h: partition_cost(agents, partition, density, &sensor, spec)?,
    })
}

/// `β = r / (√2 diam Q)`; `H_g <= H_h < H_g / β²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundFactors {
    pub beta: f64,
    pub upper_factor: f64,
}

pub fn bound_factors(fov_radius: f64, diameter: f64) -> Result<BoundFactors> {
    if !(fov_radius > 0.0 && fov_radius < diameter && diameter.is_finite()) {
        return Err(Error::BoundUndefined {
            r: fov_radius,
            diameter,
        });
    }
    let beta = fov_radius / (std::f64::consts::SQRT_2 * diameter);
    Ok(BoundFactors {
        beta,
        upper_factor: 1.0 / (beta * beta),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SensorCondition {
    /// Non-decreasing in the first distance.
    C1,
    /// Non-decreasing in the second distance.
    C2,
    /// Symmetric in its arguments.
    C3,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionViolation {
    pub condition: SensorCondition,
    pub x: f64,
    pub y: f64,
    pub k: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub samples: usize,
    pub c1_violations: usize,
    pub c2_violations: usize,
    pub c3_violations: usize,
    pub first_violation: Option<ConditionViolation>,
}

impl ConditionReport {
    pub fn violations(&self) -> usize {
        self.c1_violations + self.c2_violations + self.c3_violations
    }

    pub fn passed(&self) -> bool {
        self.violations() == 0
    }
}

/// Randomized check of the monotonicity and symmetry conditions over
/// `(x, y, k) ∈ [0, domain]³`.
pub fn check_sensor_conditions<F>(f: F, domain: f64, samples: usize, seed: u64) -> ConditionReport
where
    F: Fn(f64, f64) -> f64,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = ConditionReport {
        samples,
        c1_violations: 0,
        c2_violations: 0,
        c3_violations: 0,
        first_violation: None,
    };
    for _ in 0..samples {
        let x = rng.gen_range(0.0..=domain);
        let y = rng.gen_range(0.0..=domain);
        let k = rng.gen_range(0.0..=domain);
        let base = f(x, y);
        let checks = [
            (SensorCondition::C1, f(x + k, y) >= base),
            (SensorCondition::C2, f(x, y + k) >= base),
            (SensorCondition::C3, f(x, y) == f(y, x)),
        ];
        for (condition, ok) in checks {
            if ok {
                continue;
            }
            match condition {
                SensorCondition::C1 => report.c1_violations += 1,
                SensorCondition::C2 => report.c2_violations += 1,
                SensorCondition::C3 => report.c3_violations += 1,
            }
            report
                .first_violation
                .get_or_insert(ConditionViolation { condition, x, y, k });
        }
    }
    report
}

pub fn check_sensor_model(sensor: &SensorModel, domain: f64, samples: usize, seed: u64) -> ConditionReport {
    check_sensor_conditions(|x, y| sensor.eval(x, y), domain, samples, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{GaussianMixtureDensity, UniformDensity};
    use approx::assert_relative_eq;

    const DIAM: f64 = 1.5 * std::f64::consts::SQRT_2;

    #[test]
    fn sensor_values() {
        assert_eq!(sensor_g(0.0, 0.0), 0.0);
        assert_eq!(sensor_g(3.0, 4.0), 25.0);
        assert_eq!(sensor_g(0.2, 0.7), sensor_g(0.7, 0.2));
        assert_relative_eq!(sensor_h(0.3, 0.4, 0.5, DIAM), 0.25, epsilon = 1e-15);
        assert_relative_eq!(sensor_h(0.6, 0.1, 0.5, DIAM), 9.0, epsilon = 1e-14);
        assert_relative_eq!(sensor_h(0.5, 0.5, 0.5, DIAM), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn bound_factor_arithmetic() {
        let b = bound_factors(0.5, DIAM).unwrap();
        assert_relative_eq!(b.beta, 1.0 / 6.0, epsilon = 1e-15);
        assert_relative_eq!(b.upper_factor, 36.0, epsilon = 1e-12);
        let b = bound_factors(DIAM / 2f64.sqrt(), DIAM).unwrap();
        assert_relative_eq!(b.beta, 0.5, epsilon = 1e-15);
        assert_relative_eq!(b.upper_factor, 4.0, epsilon = 1e-12);
        let b = bound_factors(DIAM * (1.0 - 1e-12), DIAM).unwrap();
        assert_relative_eq!(b.beta, 1.0 / 2f64.sqrt(), epsilon = 1e-9);
        assert_relative_eq!(b.upper_factor, 2.0, epsilon = 1e-9);
        assert!(matches!(bound_factors(DIAM, DIAM), Err(Error::BoundUndefined { .. })));
        assert!(bound_factors(0.0, DIAM).is_err());
    }

    #[test]
    fn sensor_conditions() {
        let h = SensorModel::photogrammetry(0.5, DIAM).unwrap();
        assert!(check_sensor_model(&h, DIAM, 100_000, 1).passed());
        assert!(check_sensor_model(&SensorModel::Auxiliary, DIAM, 100_000, 2).passed());
        let broken = check_sensor_conditions(|x, _| -x, DIAM, 1000, 3);
        assert!(broken.c1_violations > 0);
        assert_eq!(broken.c2_violations, 0);
        assert!(broken.c3_violations > 0);
        assert!(broken.first_violation.is_some());
    }

    #[test]
    fn single_cell_auxiliary_cost() {
        let sq = ConvexPolygon::square(1.0).unwrap();
        let c = Point2::new(0.5, 0.5);
        let agents = [c, c + Point2::new(1e-6, 0.0)];
        let mut cells = BTreeMap::new();
        cells.insert(PairKey::new(0, 1).unwrap(), sq.clone());
        let spec = QuadratureSpec::default();
        let v = coverage_cost(&agents, &sq, &cells, &UniformDensity(1.0), &SensorModel::Auxiliary, &spec)
            .unwrap();
        assert_relative_eq!(v, 1.0 / 3.0, epsilon = 1e-11);
        let h_g = auxiliary_cost(&agents, &sq, &UniformDensity(1.0), &spec).unwrap();
        assert_relative_eq!(h_g, 1.0 / 3.0, epsilon = 1e-11);
        let doubled =
            coverage_cost(&agents, &sq, &cells, &UniformDensity(2.0), &SensorModel::Auxiliary, &spec)
                .unwrap();
        assert_relative_eq!(doubled, 2.0 * v, max_relative = 1e-12);
    }

    #[test]
    fn incomplete_partition_rejected() {
        let sq = ConvexPolygon::square(1.0).unwrap();
        let half = ConvexPolygon::rectangle(Point2::ZERO, Point2::new(0.5, 1.0)).unwrap();
        let mut cells = BTreeMap::new();
        cells.insert(PairKey::new(0, 1).unwrap(), half);
        let agents = [Point2::new(0.2, 0.2), Point2::new(0.8, 0.8)];
        let r = coverage_cost(
            &agents,
            &sq,
            &cells,
            &UniformDensity(1.0),
            &SensorModel::Auxiliary,
            &QuadratureSpec::default(),
        );
        assert!(matches!(r, Err(Error::InvalidPartition { .. })));
    }

    #[test]
    fn large_fov_makes_costs_equal() {
        let q = ConvexPolygon::square(1.5).unwrap();
        let d = GaussianMixtureDensity::single(1.0, Point2::new(0.5, 0.9), 0.3).unwrap();
        let agents = [
            Point2::new(0.2, 0.3),
            Point2::new(1.1, 0.4),
            Point2::new(0.7, 1.3),
            Point2::new(0.9, 0.8),
        ];
        let spec = QuadratureSpec::default();
        let h_g = auxiliary_cost(&agents, &q, &d, &spec).unwrap();
        let h_h = photogrammetry_cost(&agents, &q, &d, DIAM * 2f64.sqrt(), &spec).unwrap();
        assert_relative_eq!(h_h, h_g, max_relative = 1e-6);
    }

    #[test]
    fn tiny_region_coincident_pair_reduces_to_auxiliary() {
        let q = ConvexPolygon::rectangle(Point2::new(0.7, 0.7), Point2::new(0.8, 0.8)).unwrap();
        let d = GaussianMixtureDensity::single(1.0, Point2::new(0.75, 0.75), 0.2).unwrap();
        let agents = [Point2::new(0.75, 0.75), Point2::new(0.75, 0.75 + 1e-6)];
        let spec = QuadratureSpec::default();
        let h_g = auxiliary_cost(&agents, &q, &d, &spec).unwrap();
        let h_h = photogrammetry_cost(&agents, &q, &d, 0.5, &spec).unwrap();
        assert_relative_eq!(h_h, h_g, max_relative = 1e-6);
    }

    #[test]
    fn translation_invariance() {
        let q = ConvexPolygon::square(1.5).unwrap();
        let d = GaussianMixtureDensity::single(1.0, Point2::new(0.6, 0.9), 0.25).unwrap();
        let agents = [Point2::new(0.2, 0.3), Point2::new(1.1, 0.4), Point2::new(0.7, 1.3)];
        let v = Point2::new(3.25, -1.5);
        let moved: Vec<Point2> = agents.iter().map(|&p| p + v).collect();
        let spec = QuadratureSpec::default();
        let a = auxiliary_cost(&agents, &q, &d, &spec).unwrap();
        let b = auxiliary_cost(&moved, &q.translated(v), &d.translated(v), &spec).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-6);
    }
}
