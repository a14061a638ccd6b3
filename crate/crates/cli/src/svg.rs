//! Trajectory figure: density contours, final second-order partition,
//! dashed agent paths and final positions.

use std::fmt::Write;

use photocov_core::density::Density;
use photocov_core::geometry::{ConvexPolygon, OrderTwoPartition, Point2};
use photocov_core::simulator::SimulationTrace;

const SIZE: f64 = 600.0;
const MARGIN: f64 = 20.0;
const CONTOUR_GRID: usize = 120;
const CONTOUR_LEVELS: usize = 8;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
];

struct Frame {
    lo: Point2,
    scale: f64,
    height: f64,
}

impl Frame {
    fn new(region: &ConvexPolygon) -> Self {
        let (lo, hi) = region.bounding_box().unwrap_or((Point2::ZERO, Point2::new(1.0, 1.0)));
        let span = (hi.x - lo.x).max(hi.y - lo.y).max(f64::MIN_POSITIVE);
        let scale = (SIZE - 2.0 * MARGIN) / span;
        Self {
            lo,
            scale,
            height: (hi.y - lo.y) * scale + 2.0 * MARGIN,
        }
    }

    fn map(&self, p: Point2) -> (f64, f64) {
        (
            MARGIN + (p.x - self.lo.x) * self.scale,
            self.height - MARGIN - (p.y - self.lo.y) * self.scale,
        )
    }

    fn points(&self, ps: &[Point2]) -> String {
        ps.iter()
            .map(|&p| {
                let (x, y) = self.map(p);
                format!("{x:.3},{y:.3}")
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Marching-squares segments of `{φ = level}` over the region's bounding box.
fn contour_segments<D: Density + ?Sized>(region: &ConvexPolygon, density: &D, levels: &[f64]) -> Vec<(Point2, Point2)> {
    let Some((lo, hi)) = region.bounding_box() else {
        return Vec::new();
    };
    let n = CONTOUR_GRID;
    let at = |i: usize, j: usize| {
        Point2::new(
            lo.x + (hi.x - lo.x) * i as f64 / n as f64,
            lo.y + (hi.y - lo.y) * j as f64 / n as f64,
        )
    };
    let values: Vec<Vec<f64>> = (0..=n).map(|i| (0..=n).map(|j| density.eval(at(i, j))).collect()).collect();
    let mut out = Vec::new();
    for &level in levels {
        for i in 0..n {
            for j in 0..n {
                let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
                let v: Vec<f64> = corners.iter().map(|&(a, b)| values[a][b]).collect();
                // crossing points on each edge whose ends straddle the level
                let mut crossings = Vec::with_capacity(4);
                for e in 0..4 {
                    let (a, b) = (e, (e + 1) % 4);
                    if (v[a] >= level) != (v[b] >= level) {
                        let t = (level - v[a]) / (v[b] - v[a]);
                        let (pa, pb) = (at(corners[a].0, corners[a].1), at(corners[b].0, corners[b].1));
                        crossings.push(pa + (pb - pa) * t);
                    }
                }
                if crossings.len() == 2 {
                    out.push((crossings[0], crossings[1]));
                } else if crossings.len() == 4 {
                    // saddle: resolve with the cell-center average
                    let center = v.iter().sum::<f64>() / 4.0;
                    if (center >= level) == (v[0] >= level) {
                        out.push((crossings[0], crossings[1]));
                        out.push((crossings[2], crossings[3]));
                    } else {
                        out.push((crossings[3], crossings[0]));
                        out.push((crossings[1], crossings[2]));
                    }
                }
            }
        }
    }
    out.retain(|(a, b)| region.contains(*a, 1e-9) && region.contains(*b, 1e-9));
    out
}

pub fn render<D: Density + ?Sized>(
    region: &ConvexPolygon,
    density: &D,
    trace: &SimulationTrace,
    partition: &OrderTwoPartition,
) -> String {
    let frame = Frame::new(region);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE:.0}" height="{:.0}" viewBox="0 0 {SIZE:.0} {:.0}">"#,
        frame.height, frame.height
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);

    let peak = {
        let n = CONTOUR_GRID as f64;
        let (lo, hi) = region.bounding_box().unwrap_or((Point2::ZERO, Point2::ZERO));
        (0..=CONTOUR_GRID)
            .flat_map(|i| (0..=CONTOUR_GRID).map(move |j| (i, j)))
            .map(|(i, j)| {
                density.eval(Point2::new(
                    lo.x + (hi.x - lo.x) * i as f64 / n,
                    lo.y + (hi.y - lo.y) * j as f64 / n,
                ))
            })
            .fold(0.0, f64::max)
    };
    let levels: Vec<f64> = (1..=CONTOUR_LEVELS)
        .map(|k| peak * k as f64 / (CONTOUR_LEVELS + 1) as f64)
        .collect();
    let _ = writeln!(s, r##"<g id="density" stroke="#999999" stroke-width="0.8" fill="none">"##);
    for (a, b) in contour_segments(region, density, &levels) {
        let ((x1, y1), (x2, y2)) = (frame.map(a), frame.map(b));
        let _ = writeln!(s, r#"<line x1="{x1:.3}" y1="{y1:.3}" x2="{x2:.3}" y2="{y2:.3}"/>"#);
    }
    let _ = writeln!(s, "</g>");

    let _ = writeln!(s, r##"<g id="partition" stroke="#333333" stroke-width="1" fill="none">"##);
    for (_, cell) in partition.nonempty_cells() {
        let _ = writeln!(s, r#"<polygon points="{}"/>"#, frame.points(cell.vertices()));
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(
        s,
        r##"<polygon id="region" points="{}" stroke="black" stroke-width="2" fill="none"/>"##,
        frame.points(region.vertices())
    );

    let n = trace.initial().positions.len();
    let _ = writeln!(s, r#"<g id="trajectories" fill="none" stroke-width="1.5" stroke-dasharray="6 4">"#);
    for a in 0..n {
        let path: Vec<Point2> = trace.records.iter().map(|r| r.positions[a]).collect();
        let _ = writeln!(
            s,
            r#"<polyline stroke="{}" points="{}"/>"#,
            PALETTE[a % PALETTE.len()],
            frame.points(&path)
        );
    }
    let _ = writeln!(s, "</g>");

    let _ = writeln!(s, r#"<g id="agents">"#);
    for (a, (p0, p)) in trace.initial().positions.iter().zip(trace.final_positions()).enumerate() {
        let color = PALETTE[a % PALETTE.len()];
        let (x0, y0) = frame.map(*p0);
        let (x, y) = frame.map(*p);
        let _ = writeln!(
            s,
            r#"<circle cx="{x0:.3}" cy="{y0:.3}" r="3" fill="none" stroke="{color}"/>"#
        );
        let _ = writeln!(s, r#"<circle cx="{x:.3}" cy="{y:.3}" r="5" fill="{color}"/>"#);
    }
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use photocov_core::density::GaussianMixtureDensity;

    #[test]
    fn contours_of_a_peak_are_closed_rings() {
        let q = ConvexPolygon::square(1.5).unwrap();
        let d = GaussianMixtureDensity::single(1.0, Point2::new(0.75, 0.75), 0.2).unwrap();
        let segs = contour_segments(&q, &d, &[0.5]);
        assert!(!segs.is_empty());
        // every crossing lies on the level set, |q - μ| = σ √(2 ln 2)
        let radius = 0.2 * (2.0 * 2f64.ln()).sqrt();
        for (a, _) in segs {
            assert!((a.distance(Point2::new(0.75, 0.75)) - radius).abs() < 0.01);
        }
    }
}
