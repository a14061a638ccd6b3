//! Density-weighted integrals over convex cells.
//!
//! Cells are fan-triangulated from vertex 0 and every triangle is refined by
//! uniform 4-way subdivision until two successive levels agree to `rel_tol`.
//! The photogrammetry integrand jumps on the boundary of the two agents'
//! field-of-view lens, so that part is integrated over the lens region
//! itself (see [`curved`]) rather than through the jump.

pub mod curved;
mod rules;

pub use rules::{gauss_legendre, TriangleRule};

use serde::{Deserialize, Serialize};

use crate::cost::SensorModel;
use crate::density::Density;
use crate::error::{Error, Result};
use crate::geometry::{ConvexPolygon, Point2};

use curved::Disk;

/// Cells with mass at or below this are treated as massless.
pub const MASS_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    pub base_rule_degree: u32,
    pub max_subdivisions: u32,
    pub rel_tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            base_rule_degree: 7,
            max_subdivisions: 6,
            rel_tol: 1e-6,
        }
    }
}

impl QuadratureSpec {
    /// Spec used where finite differences of integrals are taken.
    pub fn precise() -> Self {
        Self {
            base_rule_degree: 7,
            max_subdivisions: 6,
            rel_tol: 1e-12,
        }
    }

    pub fn with_rel_tol(self, rel_tol: f64) -> Self {
        Self { rel_tol, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.base_rule_degree < 2 {
            return Err(Error::InvalidParameter(format!(
                "quadrature degree must be >= 2, got {}",
                self.base_rule_degree
            )));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "rel_tol must be positive, got {}",
                self.rel_tol
            )));
        }
        Ok(())
    }

    pub fn rule(&self) -> TriangleRule {
        TriangleRule::for_degree(self.base_rule_degree)
    }
}

fn triangle_sum<const N: usize, F>(
    rule: &TriangleRule,
    tri: [Point2; 3],
    level: u32,
    f: &F,
    acc: &mut [f64; N],
) where
    F: Fn(Point2) -> [f64; N],
{
    let [a, b, c] = tri;
    if level == 0 {
        let area = 0.5 * (b - a).cross(c - a);
        let part = rule.integrate(a, b, c, f);
        for (s, v) in acc.iter_mut().zip(part) {
            *s += area * v;
        }
        return;
    }
    let ab = (a + b) * 0.5;
    let bc = (b + c) * 0.5;
    let ca = (c + a) * 0.5;
    for t in [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]] {
        triangle_sum(rule, t, level - 1, f, acc);
    }
}

/// Integrates a vector-valued `f` over a convex polygon.
pub fn integrate_polygon<const N: usize, F>(
    poly: &ConvexPolygon,
    spec: &QuadratureSpec,
    f: F,
) -> [f64; N]
where
    F: Fn(Point2) -> [f64; N],
{
    let v = poly.vertices();
    if v.len() < 3 {
        return [0.0; N];
    }
    let rule = spec.rule();
    let fan: Vec<[Point2; 3]> = (1..v.len() - 1).map(|k| [v[0], v[k], v[k + 1]]).collect();
    let level_sum = |level: u32| {
        let mut acc = [0.0; N];
        for &t in &fan {
            triangle_sum(&rule, t, level, &f, &mut acc);
        }
        acc
    };
    let mut prev = level_sum(0);
    for level in 1..=spec.max_subdivisions {
        let cur = level_sum(level);
        let scale = cur.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        let change = cur
            .iter()
            .zip(&prev)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        if change <= spec.rel_tol * scale {
            return cur;
        }
        prev = cur;
    }
    prev
}

pub fn integrate_scalar<F>(poly: &ConvexPolygon, spec: &QuadratureSpec, f: F) -> f64
where
    F: Fn(Point2) -> f64,
{
    integrate_polygon(poly, spec, |q| [f(q)])[0]
}

/// Mass and first moment `∫ q φ(q) dq` of a cell.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct CellMoments {
    pub mass: f64,
    pub first_moment: Point2,
}

impl CellMoments {
    /// Mass-weighted centroid, or an error when the mass is at or below `mass_floor`.
    pub fn centroid(&self, mass_floor: f64) -> Result<Point2> {
        if !(self.mass > mass_floor) {
            return Err(Error::MasslessCell(self.mass));
        }
        Ok(self.first_moment * (1.0 / self.mass))
    }
}

pub fn cell_moments<D: Density + ?Sized>(
    cell: &ConvexPolygon,
    density: &D,
    spec: &QuadratureSpec,
) -> CellMoments {
    let [m, mx, my] = integrate_polygon(cell, spec, |q| {
        let phi = density.eval(q);
        [phi, q.x * phi, q.y * phi]
    });
    CellMoments {
        mass: m,
        first_moment: Point2::new(mx, my),
    }
}

/// `M = ∫_cell φ(q) dq`.
pub fn cell_mass<D: Density + ?Sized>(cell: &ConvexPolygon, density: &D, spec: &QuadratureSpec) -> f64 {
    integrate_scalar(cell, spec, |q| density.eval(q))
}

/// `C = (1/M) ∫_cell q φ(q) dq`, kept inside the cell.
pub fn cell_centroid<D: Density + ?Sized>(
    cell: &ConvexPolygon,
    density: &D,
    spec: &QuadratureSpec,
) -> Result<Point2> {
    let c = cell_moments(cell, density, spec).centroid(MASS_FLOOR)?;
    // quadrature error can push a centroid hugging an edge just outside
    Ok(cell.project(c))
}

/// Mass, first moment and auxiliary cost of a cell owned by `(p_i, p_j)`, in one pass.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct CellStatistics {
    pub moments: CellMoments,
    pub auxiliary_cost: f64,
}

pub fn cell_statistics<D: Density + ?Sized>(
    cell: &ConvexPolygon,
    density: &D,
    p_i: Point2,
    p_j: Point2,
    spec: &QuadratureSpec,
) -> CellStatistics {
    let [m, mx, my, aux] = integrate_polygon(cell, spec, |q| {
        let phi = density.eval(q);
        let g = (q - p_i).norm_sq() + (q - p_j).norm_sq();
        [phi, q.x * phi, q.y * phi, g * phi]
    });
    CellStatistics {
        moments: CellMoments {
            mass: m,
            first_moment: Point2::new(mx, my),
        },
        auxiliary_cost: aux,
    }
}

/// `∫_cell f(|q - p_i|, |q - p_j|) φ(q) dq` for the given sensor.
pub fn cell_cost_integral<D: Density + ?Sized>(
    cell: &ConvexPolygon,
    density: &D,
    sensor: &SensorModel,
    p_i: Point2,
    p_j: Point2,
    spec: &QuadratureSpec,
) -> f64 {
    if cell.len() < 3 {
        return 0.0;
    }
    match *sensor {
        SensorModel::Auxiliary => integrate_scalar(cell, spec, |q| {
            ((q - p_i).norm_sq() + (q - p_j).norm_sq()) * density.eval(q)
        }),
        SensorModel::Photogrammetry { fov_radius, .. } => {
            let penalty = sensor.penalty();
            if fov_radius <= 0.0 {
                return penalty * cell_mass(cell, density, spec);
            }
            let g = |q: Point2| (q - p_i).norm_sq() + (q - p_j).norm_sq();
            let covered = cell
                .vertices()
                .iter()
                .all(|v| v.distance(p_i) <= fov_radius && v.distance(p_j) <= fov_radius);
            if covered {
                return integrate_scalar(cell, spec, |q| g(q) * density.eval(q));
            }
            // inside the lens the integrand is g instead of the penalty
            let disks = [Disk::new(p_i, fov_radius), Disk::new(p_j, fov_radius)];
            let split = |rel_tol: f64| {
                let outside = penalty * cell_mass(cell, density, &spec.with_rel_tol(rel_tol));
                let lens = curved::integrate_clipped(cell, &disks, rel_tol, |q| (g(q) - penalty) * density.eval(q));
                (outside, outside + lens)
            };
            let (outside, total) = split(spec.rel_tol);
            // the two pieces nearly cancel when the lens holds most of the mass
            let ratio = total.abs() / outside.abs().max(f64::MIN_POSITIVE);
            if ratio < 0.5 {
                split((spec.rel_tol * ratio).max(1e-14)).1
            } else {
                total
            }
        }
    }
}
