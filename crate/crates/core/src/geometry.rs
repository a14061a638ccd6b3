//! Planar primitives and the second-order Voronoi partition.
//!
//! Every cell of the partition is built by clipping the region against the
//! perpendicular bisectors between its two owning agents and every other
//! agent, so cells stay exact convex polygons.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Consecutive vertices closer than this are merged.
pub const MERGE_TOL: f64 = 1e-12;
/// Minimum pairwise agent distance for a well-defined partition.
pub const DEGENERACY_FLOOR: f64 = 1e-9;
/// Boundary tolerance used when checking that agents lie inside the region.
pub const CONTAINMENT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ZERO: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, other: Point2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<[f64; 2]> for Point2 {
    fn from(v: [f64; 2]) -> Self {
        Point2::new(v[0], v[1])
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

impl fmt::Display for Point2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for Point2 {
    fn add_assign(&mut self, rhs: Point2) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

/// The closed half-plane `{q : normal·q <= offset}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfPlane {
    pub normal: Point2,
    pub offset: f64,
}

impl HalfPlane {
    pub fn new(normal: Point2, offset: f64) -> Result<Self> {
        if !(normal.norm() > 0.0) || !offset.is_finite() {
            return Err(Error::InvalidParameter(
                "half-plane normal must be non-zero".into(),
            ));
        }
        Ok(Self { normal, offset })
    }

    /// `normal·q - offset`; non-positive inside.
    pub fn evaluate(&self, q: Point2) -> f64 {
        self.normal.dot(q) - self.offset
    }

    pub fn contains(&self, q: Point2) -> bool {
        self.evaluate(q) <= 0.0
    }

    /// Classification slack, in units of `evaluate`: 1e-13 m scaled by the
    /// line's distance from the origin.
    fn slack(&self) -> f64 {
        let n = self.normal.norm();
        1e-13 * (n + self.offset.abs())
    }
}

/// Points at least as close to `a` as to `b`: `2(b-a)·q <= |b|^2 - |a|^2`.
pub fn bisector_halfplane(a: Point2, b: Point2) -> Result<HalfPlane> {
    let d = b - a;
    if d.norm() <= DEGENERACY_FLOOR {
        return Err(Error::DegenerateBisector);
    }
    Ok(HalfPlane {
        normal: d * 2.0,
        offset: d.dot(a + b),
    })
}

/// Convex polygon with counterclockwise vertices. May be empty.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<Point2>", into = "Vec<Point2>")]
pub struct ConvexPolygon {
    vertices: Vec<Point2>,
}

impl TryFrom<Vec<Point2>> for ConvexPolygon {
    type Error = Error;
    fn try_from(v: Vec<Point2>) -> Result<Self> {
        ConvexPolygon::new(v)
    }
}

impl From<ConvexPolygon> for Vec<Point2> {
    fn from(p: ConvexPolygon) -> Self {
        p.vertices
    }
}

impl ConvexPolygon {
    /// Validates convexity and normalizes orientation to counterclockwise.
    pub fn new(vertices: Vec<Point2>) -> Result<Self> {
        if vertices.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite);
        }
        let mut vertices = merge_close_vertices(vertices);
        if vertices.len() >= 3 && signed_area(&vertices) < 0.0 {
            vertices.reverse();
        }
        let poly = Self { vertices };
        if !poly.is_convex() {
            return Err(Error::NotConvex);
        }
        Ok(poly)
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn rectangle(min: Point2, max: Point2) -> Result<Self> {
        if !(max.x > min.x && max.y > min.y) {
            return Err(Error::InvalidParameter(format!(
                "rectangle corners {min} and {max} are not ordered"
            )));
        }
        Self::new(vec![
            min,
            Point2::new(max.x, min.y),
            max,
            Point2::new(min.x, max.y),
        ])
    }

    /// Axis-aligned square `[0, side]^2`.
    pub fn square(side: f64) -> Result<Self> {
        Self::rectangle(Point2::ZERO, Point2::new(side, side))
    }

    pub(crate) fn from_ccw_unchecked(vertices: Vec<Point2>) -> Self {
        Self { vertices }
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn area(&self) -> f64 {
        polygon_area(self)
    }

    pub fn diameter(&self) -> Result<f64> {
        polygon_diameter(self)
    }

    /// Iterator over directed edges `(v_k, v_{k+1})`.
    pub fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |k| (self.vertices[k], self.vertices[(k + 1) % n]))
    }

    /// Cross-product convexity check (collinear vertices allowed).
    pub fn is_convex(&self) -> bool {
        let n = self.vertices.len();
        if n < 3 {
            return true;
        }
        let scale = self
            .vertices
            .iter()
            .map(|p| p.x.abs().max(p.y.abs()))
            .fold(1.0_f64, f64::max);
        let tol = 1e-12 * scale * scale;
        (0..n).all(|k| {
            let a = self.vertices[k];
            let b = self.vertices[(k + 1) % n];
            let c = self.vertices[(k + 2) % n];
            (b - a).cross(c - b) >= -tol
        })
    }

    /// Area centroid of the polygon; `None` when degenerate.
    pub fn centroid(&self) -> Option<Point2> {
        let area = signed_area(&self.vertices);
        if self.vertices.len() < 3 || area <= 0.0 {
            return None;
        }
        let o = self.vertices[0];
        let mut acc = Point2::ZERO;
        for (a, b) in self.edges() {
            let (a, b) = (a - o, b - o);
            acc += (a + b) * a.cross(b);
        }
        Some(o + acc * (1.0 / (6.0 * area)))
    }

    /// Closed containment with an absolute boundary tolerance.
    pub fn contains(&self, q: Point2, tol: f64) -> bool {
        match self.vertices.len() {
            0 => false,
            1 => self.vertices[0].distance(q) <= tol,
            2 => distance_to_segment(q, self.vertices[0], self.vertices[1]) <= tol,
            _ => self.edges().all(|(a, b)| {
                let e = b - a;
                e.cross(q - a) >= -tol * e.norm()
            }),
        }
    }

    /// Nearest point of the polygon to `q` (identity for interior points).
    pub fn project(&self, q: Point2) -> Point2 {
        if self.vertices.len() == 1 || self.contains(q, 0.0) {
            return if self.vertices.len() == 1 {
                self.vertices[0]
            } else {
                q
            };
        }
        let mut best = q;
        let mut best_d = f64::INFINITY;
        for (a, b) in self.edges() {
            let c = closest_on_segment(q, a, b);
            let d = c.distance(q);
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        best
    }

    pub fn bounding_box(&self) -> Option<(Point2, Point2)> {
        let first = *self.vertices.first()?;
        Some(self.vertices.iter().fold((first, first), |(lo, hi), p| {
            (
                Point2::new(lo.x.min(p.x), lo.y.min(p.y)),
                Point2::new(hi.x.max(p.x), hi.y.max(p.y)),
            )
        }))
    }

    /// `Some((min, max))` when the polygon is an axis-aligned rectangle.
    pub fn as_rectangle(&self) -> Option<(Point2, Point2)> {
        if self.vertices.len() != 4 {
            return None;
        }
        let axis_aligned = self.edges().all(|(a, b)| {
            let d = b - a;
            d.x.abs() <= MERGE_TOL || d.y.abs() <= MERGE_TOL
        });
        if axis_aligned {
            self.bounding_box()
        } else {
            None
        }
    }

    /// Supporting half-planes of the edges; their intersection is the polygon.
    pub fn half_planes(&self) -> Vec<HalfPlane> {
        self.edges()
            .map(|(a, b)| {
                let d = b - a;
                let normal = Point2::new(d.y, -d.x);
                HalfPlane {
                    normal,
                    offset: normal.dot(a),
                }
            })
            .collect()
    }

    pub fn translated(&self, v: Point2) -> Self {
        Self::from_ccw_unchecked(self.vertices.iter().map(|&p| p + v).collect())
    }

    /// Same polygon starting from its lowest (then leftmost) vertex, so that
    /// equal cells reached by different clipping sequences triangulate alike.
    fn canonical(mut self) -> Self {
        if let Some(k) = (0..self.vertices.len())
            .min_by(|&a, &b| {
                let (p, q) = (self.vertices[a], self.vertices[b]);
                p.y.total_cmp(&q.y).then(p.x.total_cmp(&q.x))
            })
        {
            self.vertices.rotate_left(k);
        }
        self
    }
}

fn signed_area(v: &[Point2]) -> f64 {
    if v.len() < 3 {
        return 0.0;
    }
    let o = v[0];
    let mut twice = 0.0;
    for k in 1..v.len() - 1 {
        twice += (v[k] - o).cross(v[k + 1] - o);
    }
    0.5 * twice
}

fn closest_on_segment(q: Point2, a: Point2, b: Point2) -> Point2 {
    let d = b - a;
    let len_sq = d.norm_sq();
    if len_sq == 0.0 {
        return a;
    }
    let t = ((q - a).dot(d) / len_sq).clamp(0.0, 1.0);
    a + d * t
}

fn distance_to_segment(q: Point2, a: Point2, b: Point2) -> f64 {
    closest_on_segment(q, a, b).distance(q)
}

fn merge_close_vertices(mut v: Vec<Point2>) -> Vec<Point2> {
    v.dedup_by(|b, a| a.distance(*b) <= MERGE_TOL);
    while v.len() > 1 && v[0].distance(*v.last().unwrap()) <= MERGE_TOL {
        v.pop();
    }
    v
}

/// Shoelace area; zero for empty or degenerate polygons.
pub fn polygon_area(poly: &ConvexPolygon) -> f64 {
    signed_area(&poly.vertices).max(0.0)
}

/// Maximum pairwise vertex distance.
pub fn polygon_diameter(poly: &ConvexPolygon) -> Result<f64> {
    if poly.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let v = &poly.vertices;
    let mut best: f64 = 0.0;
    for (k, a) in v.iter().enumerate() {
        for b in &v[k + 1..] {
            best = best.max(a.distance(*b));
        }
    }
    Ok(best)
}

/// Sutherland–Hodgman clip of a convex polygon by one half-plane.
///
/// Results with fewer than three vertices are measure-zero and returned empty.
pub fn clip(poly: &ConvexPolygon, hp: &HalfPlane) -> ConvexPolygon {
    let v = &poly.vertices;
    if v.is_empty() {
        return ConvexPolygon::empty();
    }
    let slack = hp.slack();
    // -1 inside, 0 on the line, +1 outside
    let side: Vec<i8> = v
        .iter()
        .map(|&p| {
            let d = hp.evaluate(p);
            if d > slack {
                1
            } else if d < -slack {
                -1
            } else {
                0
            }
        })
        .collect();
    if side.iter().all(|&s| s <= 0) {
        return poly.clone();
    }
    if side.iter().all(|&s| s > 0) {
        return ConvexPolygon::empty();
    }
    let n = v.len();
    let mut out = Vec::with_capacity(n + 1);
    for k in 0..n {
        let l = (k + 1) % n;
        if side[k] <= 0 {
            out.push(v[k]);
        }
        if side[k] * side[l] < 0 {
            let da = hp.evaluate(v[k]);
            let db = hp.evaluate(v[l]);
            let t = da / (da - db);
            out.push(v[k] + (v[l] - v[k]) * t);
        }
    }
    let out = merge_close_vertices(out);
    if out.len() < 3 || signed_area(&out) <= 0.0 {
        ConvexPolygon::empty()
    } else {
        ConvexPolygon::from_ccw_unchecked(out)
    }
}

/// Unordered agent pair stored as `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PairKey {
    pub i: usize,
    pub j: usize,
}

impl PairKey {
    pub fn new(i: usize, j: usize) -> Result<Self> {
        if i < j {
            Ok(Self { i, j })
        } else {
            Err(Error::InvalidPairKey(i, j))
        }
    }

    /// Builds the key for `{a, b}` in either order.
    pub fn of(a: usize, b: usize) -> Result<Self> {
        Self::new(a.min(b), a.max(b))
    }

    pub fn contains(&self, agent: usize) -> bool {
        self.i == agent || self.j == agent
    }

    /// The other agent of the pair, if `agent` belongs to it.
    pub fn partner(&self, agent: usize) -> Option<usize> {
        if self.i == agent {
            Some(self.j)
        } else if self.j == agent {
            Some(self.i)
        } else {
            None
        }
    }
}

impl fmt::Display for PairKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.i, self.j)
    }
}

/// Cells of the second-order Voronoi partition, one per agent pair (possibly empty).
#[derive(Debug, Clone, PartialEq)]
pub struct OrderTwoPartition {
    region: ConvexPolygon,
    agent_count: usize,
    cells: BTreeMap<PairKey, ConvexPolygon>,
}

impl OrderTwoPartition {
    pub fn region(&self) -> &ConvexPolygon {
        &self.region
    }

    pub fn agent_count(&self) -> usize {
        self.agent_count
    }

    pub fn cells(&self) -> &BTreeMap<PairKey, ConvexPolygon> {
        &self.cells
    }

    pub fn cell(&self, key: PairKey) -> Option<&ConvexPolygon> {
        self.cells.get(&key)
    }

    pub fn nonempty_cells(&self) -> impl Iterator<Item = (PairKey, &ConvexPolygon)> {
        self.cells
            .iter()
            .filter(|(_, c)| !c.is_empty())
            .map(|(k, c)| (*k, c))
    }

    /// Non-empty cells assigned to `agent`.
    pub fn cells_of(&self, agent: usize) -> impl Iterator<Item = (PairKey, &ConvexPolygon)> {
        self.nonempty_cells().filter(move |(k, _)| k.contains(agent))
    }

    pub fn empty_count(&self) -> usize {
        self.cells.values().filter(|c| c.is_empty()).count()
    }

    pub fn total_area(&self) -> f64 {
        self.cells.values().map(polygon_area).sum()
    }

    /// Agents whose positions are needed to rebuild `agent`'s cells: each
    /// partner, plus every agent whose bisector carries an edge of one of them.
    pub fn defining_agents(&self, agent: usize, agents: &[Point2]) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        for (key, cell) in self.cells_of(agent) {
            out.insert(key.partner(agent).unwrap());
            for w in 0..agents.len() {
                if key.contains(w) {
                    continue;
                }
                let bisectors = [
                    bisector_halfplane(agents[key.i], agents[w]),
                    bisector_halfplane(agents[key.j], agents[w]),
                ];
                let on_edge = bisectors.iter().flatten().any(|hp| {
                    let tol = 1e-9 * hp.normal.norm();
                    cell.edges()
                        .any(|(a, b)| hp.evaluate(a).abs() <= tol && hp.evaluate(b).abs() <= tol)
                });
                if on_edge {
                    out.insert(w);
                }
            }
        }
        out
    }
}

/// Checks the partition preconditions: n >= 2, agents inside the region,
/// pairwise distances above the degeneracy floor.
pub fn validate_configuration(agents: &[Point2], region: &ConvexPolygon) -> Result<()> {
    if region.is_empty() {
        return Err(Error::EmptyRegion);
    }
    if agents.len() < 2 {
        return Err(Error::TooFewAgents(agents.len()));
    }
    for (k, p) in agents.iter().enumerate() {
        if !p.is_finite() {
            return Err(Error::NonFinite);
        }
        if !region.contains(*p, CONTAINMENT_TOL) {
            return Err(Error::AgentOutsideRegion(k));
        }
    }
    for a in 0..agents.len() {
        for b in a + 1..agents.len() {
            if agents[a].distance(agents[b]) <= DEGENERACY_FLOOR {
                return Err(Error::DegenerateConfiguration(a, b));
            }
        }
    }
    Ok(())
}

/// Cell of the pair `key` using only `competitors` as rival agents.
fn pair_cell(
    key: PairKey,
    agents: &[Point2],
    competitors: impl Iterator<Item = usize>,
    region: &ConvexPolygon,
) -> ConvexPolygon {
    let (pi, pj) = (agents[key.i], agents[key.j]);
    let mut cell = region.clone();
    for w in competitors {
        if key.contains(w) {
            continue;
        }
        let pw = agents[w];
        // distinct agents were validated, so bisectors exist
        for hp in [bisector_halfplane(pi, pw), bisector_halfplane(pj, pw)]
            .into_iter()
            .flatten()
        {
            cell = clip(&cell, &hp);
            if cell.is_empty() {
                return cell;
            }
        }
    }
    cell.canonical()
}

/// Second-order Voronoi partition of `region` with respect to `agents`.
pub fn order_two_voronoi(agents: &[Point2], region: &ConvexPolygon) -> Result<OrderTwoPartition> {
    validate_configuration(agents, region)?;
    let n = agents.len();
    let keys: Vec<PairKey> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| PairKey { i, j }))
        .collect();
    let cells: Vec<ConvexPolygon> = keys
        .par_iter()
        .map(|&key| pair_cell(key, agents, 0..n, region))
        .collect();
    Ok(OrderTwoPartition {
        region: region.clone(),
        agent_count: n,
        cells: keys.into_iter().zip(cells).collect(),
    })
}

/// Cells of `agent` built from the positions in `known` only (agent-local view).
pub fn local_cells(
    agent: usize,
    agents: &[Point2],
    known: &BTreeSet<usize>,
    region: &ConvexPolygon,
) -> Result<Vec<(PairKey, ConvexPolygon)>> {
    validate_configuration(agents, region)?;
    let mut out = Vec::new();
    for &partner in known {
        if partner == agent {
            continue;
        }
        let key = PairKey::of(agent, partner)?;
        let cell = pair_cell(key, agents, known.iter().copied(), region);
        if !cell.is_empty() {
            out.push((key, cell));
        }
    }
    Ok(out)
}
