//! Integration over a convex polygon intersected with disks.
//!
//! The region is convex, so each vertical line meets it in one interval
//! `[y_lo(x), y_hi(x)]`. Breakpoints in `x` sit at the region's corners, which
//! leaves both bounds smooth between them. The only square-root behaviour is
//! at the extreme `x` values, removed by the substitution `x = m - h cos t`.

use super::rules::gauss_legendre;
use crate::geometry::{ConvexPolygon, HalfPlane, Point2};

const GL_ORDER: usize = 10;
const MAX_DEPTH: u32 = 24;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disk {
    pub center: Point2,
    pub radius: f64,
}

impl Disk {
    pub fn new(center: Point2, radius: f64) -> Self {
        Self { center, radius }
    }

    fn contains(&self, q: Point2, tol: f64) -> bool {
        q.distance(self.center) <= self.radius + tol
    }
}

struct Region<'a> {
    planes: Vec<HalfPlane>,
    disks: &'a [Disk],
}

impl Region<'_> {
    fn contains(&self, q: Point2, tol: f64) -> bool {
        self.planes
            .iter()
            .all(|hp| hp.evaluate(q) <= tol * hp.normal.norm())
            && self.disks.iter().all(|d| d.contains(q, tol))
    }

    /// Vertical extent of the region at `x`, `None` when empty.
    fn y_bounds(&self, x: f64) -> Option<(f64, f64)> {
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for hp in &self.planes {
            let (nx, ny) = (hp.normal.x, hp.normal.y);
            if ny.abs() <= 1e-14 * hp.normal.norm() {
                continue;
            }
            let y = (hp.offset - nx * x) / ny;
            if ny > 0.0 {
                hi = hi.min(y);
            } else {
                lo = lo.max(y);
            }
        }
        for d in self.disks {
            let s = d.radius * d.radius - (x - d.center.x).powi(2);
            let half = s.max(0.0).sqrt();
            lo = lo.max(d.center.y - half);
            hi = hi.min(d.center.y + half);
        }
        (lo.is_finite() && hi.is_finite() && hi > lo).then_some((lo, hi))
    }

    /// Candidate corner points: polygon vertices, edge/circle and
    /// circle/circle crossings, and circle x-extremes, filtered to the region.
    fn corners(&self, poly: &ConvexPolygon, scale: f64) -> Vec<Point2> {
        let mut cand: Vec<Point2> = poly.vertices().to_vec();
        for (a, b) in poly.edges() {
            for d in self.disks {
                cand.extend(segment_circle(a, b, d));
            }
        }
        for (k, d1) in self.disks.iter().enumerate() {
            cand.push(d1.center + Point2::new(d1.radius, 0.0));
            cand.push(d1.center - Point2::new(d1.radius, 0.0));
            for d2 in &self.disks[k + 1..] {
                cand.extend(circle_circle(d1, d2));
            }
        }
        let tol = 1e-10 * scale;
        cand.retain(|&q| self.contains(q, tol));
        cand
    }
}

fn segment_circle(a: Point2, b: Point2, d: &Disk) -> Vec<Point2> {
    let e = b - a;
    let f = a - d.center;
    let qa = e.norm_sq();
    if qa == 0.0 {
        return Vec::new();
    }
    let qb = 2.0 * f.dot(e);
    let qc = f.norm_sq() - d.radius * d.radius;
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 {
        return Vec::new();
    }
    let s = disc.sqrt();
    [(-qb - s) / (2.0 * qa), (-qb + s) / (2.0 * qa)]
        .into_iter()
        .filter(|t| (0.0..=1.0).contains(t))
        .map(|t| a + e * t)
        .collect()
}

fn circle_circle(d1: &Disk, d2: &Disk) -> Vec<Point2> {
    let v = d2.center - d1.center;
    let dist = v.norm();
    if dist == 0.0 || dist > d1.radius + d2.radius || dist < (d1.radius - d2.radius).abs() {
        return Vec::new();
    }
    let along = (dist * dist + d1.radius * d1.radius - d2.radius * d2.radius) / (2.0 * dist);
    let h = (d1.radius * d1.radius - along * along).max(0.0).sqrt();
    let base = d1.center + v * (along / dist);
    let perp = Point2::new(-v.y, v.x) * (h / dist);
    vec![base + perp, base - perp]
}

struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    fn new() -> Self {
        let (nodes, weights) = gauss_legendre(GL_ORDER);
        Self { nodes, weights }
    }

    fn apply(&self, f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
        h * self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(m + h * x))
            .sum::<f64>()
    }

    /// Adaptive bisection until halves agree with the parent to `rel_tol`.
    fn adaptive(&self, f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
        let whole = self.apply(f, a, b);
        let tol = (rel_tol * whole.abs()).max(1e-300);
        self.refine(f, a, b, whole, tol, MAX_DEPTH)
    }

    fn refine(&self, f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (l, r) = (self.apply(f, a, m), self.apply(f, m, b));
        if depth == 0 || (l + r - whole).abs() <= tol {
            return l + r;
        }
        self.refine(f, a, m, l, 0.5 * tol, depth - 1) + self.refine(f, m, b, r, 0.5 * tol, depth - 1)
    }
}

/// `∫_{poly ∩ disks} f(q) dq`.
pub fn integrate_clipped<F>(poly: &ConvexPolygon, disks: &[Disk], rel_tol: f64, f: F) -> f64
where
    F: Fn(Point2) -> f64,
{
    if poly.len() < 3 || disks.iter().any(|d| !(d.radius > 0.0)) {
        return 0.0;
    }
    if disks
        .iter()
        .any(|d| poly.project(d.center).distance(d.center) > d.radius)
    {
        return 0.0;
    }
    let region = Region {
        planes: poly.half_planes(),
        disks,
    };
    let scale = poly
        .bounding_box()
        .map(|(lo, hi)| (hi - lo).norm())
        .unwrap_or(1.0)
        .max(f64::MIN_POSITIVE);
    let mut xs: Vec<f64> = region.corners(poly, scale).iter().map(|p| p.x).collect();
    if xs.len() < 2 {
        return 0.0;
    }
    xs.sort_by(f64::total_cmp);
    xs.dedup_by(|b, a| (*b - *a).abs() <= 1e-12 * scale);

    let rule = GaussRule::new();
    let inner_tol = 0.1 * rel_tol;
    let mut total = 0.0;
    for w in xs.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
        let column = |t: f64| {
            let x = m - h * t.cos();
            match region.y_bounds(x) {
                Some((lo, hi)) => {
                    let g = |y: f64| f(Point2::new(x, y));
                    h * t.sin() * rule.adaptive(&g, lo, hi, inner_tol)
                }
                None => 0.0,
            }
        };
        total += rule.adaptive(&column, 0.0, std::f64::consts::PI, rel_tol);
    }
    total
}
