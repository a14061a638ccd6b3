//! Feature-density fields over the region.
//!
//! The field is a sum of isotropic Gaussian peaks plus an optional uniform
//! floor. Peaks are fitted to per-image feature counts by damped
//! Gauss–Newton least squares with several starts.

use std::io::Read;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point2;

/// Floor added to simulation densities, relative to the largest amplitude.
pub const DEFAULT_FLOOR_FRACTION: f64 = 1e-3;

/// A scalar field `φ: Q -> R>=0`.
pub trait Density: Sync {
    fn eval(&self, q: Point2) -> f64;
}

/// Constant field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformDensity(pub f64);

impl Density for UniformDensity {
    fn eval(&self, _q: Point2) -> f64 {
        self.0
    }
}

impl<D: Density + ?Sized> Density for &D {
    fn eval(&self, q: Point2) -> f64 {
        (**self).eval(q)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianComponent {
    pub amplitude: f64,
    pub center: Point2,
    pub sigma: f64,
}

impl GaussianComponent {
    pub fn new(amplitude: f64, center: Point2, sigma: f64) -> Result<Self> {
        let c = Self {
            amplitude,
            center,
            sigma,
        };
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> Result<()> {
        if !(self.amplitude > 0.0 && self.amplitude.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "amplitude must be positive, got {}",
                self.amplitude
            )));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sigma must be positive, got {}",
                self.sigma
            )));
        }
        if !self.center.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(())
    }

    pub fn eval(&self, q: Point2) -> f64 {
        let d2 = (q - self.center).norm_sq();
        self.amplitude * (-d2 / (2.0 * self.sigma * self.sigma)).exp()
    }
}

/// `φ(q) = Σ A_i exp(-|q - μ_i|² / (2σ_i²)) + floor`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MixtureDocument", into = "MixtureDocument")]
pub struct GaussianMixtureDensity {
    components: Vec<GaussianComponent>,
    floor: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MixtureDocument {
    components: Vec<GaussianComponent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    floor: Option<f64>,
}

impl TryFrom<MixtureDocument> for GaussianMixtureDensity {
    type Error = Error;
    fn try_from(doc: MixtureDocument) -> Result<Self> {
        match doc.floor {
            Some(floor) => Self::new(doc.components, floor),
            None => Self::with_default_floor(doc.components),
        }
    }
}

impl From<GaussianMixtureDensity> for MixtureDocument {
    fn from(d: GaussianMixtureDensity) -> Self {
        MixtureDocument {
            components: d.components,
            floor: Some(d.floor),
        }
    }
}

impl GaussianMixtureDensity {
    pub fn new(components: Vec<GaussianComponent>, floor: f64) -> Result<Self> {
        for c in &components {
            c.validate()?;
        }
        if !(floor >= 0.0 && floor.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "floor must be non-negative, got {floor}"
            )));
        }
        if components.is_empty() && floor == 0.0 {
            return Err(Error::InvalidParameter(
                "a mixture needs at least one component or a positive floor".into(),
            ));
        }
        Ok(Self { components, floor })
    }

    /// Adds the default floor of `1e-3 × max amplitude`.
    pub fn with_default_floor(components: Vec<GaussianComponent>) -> Result<Self> {
        let max_amp = components
            .iter()
            .map(|c| c.amplitude)
            .fold(0.0_f64, f64::max);
        Self::new(components, DEFAULT_FLOOR_FRACTION * max_amp)
    }

    pub fn single(amplitude: f64, center: Point2, sigma: f64) -> Result<Self> {
        Self::new(vec![GaussianComponent::new(amplitude, center, sigma)?], 0.0)
    }

    pub fn components(&self) -> &[GaussianComponent] {
        &self.components
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn with_floor(mut self, floor: f64) -> Result<Self> {
        self.floor = floor;
        Self::new(self.components, self.floor)
    }

    pub fn max_amplitude(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.amplitude)
            .fold(0.0_f64, f64::max)
    }

    pub fn eval(&self, q: Point2) -> f64 {
        self.components.iter().map(|c| c.eval(q)).sum::<f64>() + self.floor
    }

    /// Every amplitude and the floor multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.components
                .iter()
                .map(|c| GaussianComponent {
                    amplitude: c.amplitude * factor,
                    ..*c
                })
                .collect(),
            self.floor * factor,
        )
    }

    pub fn translated(&self, v: Point2) -> Self {
        Self {
            components: self
                .components
                .iter()
                .map(|c| GaussianComponent {
                    center: c.center + v,
                    ..*c
                })
                .collect(),
            floor: self.floor,
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }
}

impl Density for GaussianMixtureDensity {
    fn eval(&self, q: Point2) -> f64 {
        GaussianMixtureDensity::eval(self, q)
    }
}

/// Feature count extracted from an image taken at `location`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureMeasurement {
    pub location: Point2,
    pub feature_count: f64,
}

impl FeatureMeasurement {
    pub fn new(location: Point2, feature_count: f64) -> Self {
        Self {
            location,
            feature_count,
        }
    }
}

#[derive(Deserialize)]
struct MeasurementRow {
    x: f64,
    y: f64,
    count: f64,
}

/// Reads measurements from CSV with header `x,y,count`.
pub fn read_measurements_csv<R: Read>(reader: R) -> Result<Vec<FeatureMeasurement>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["x", "y", "count"] {
        return Err(Error::InvalidParameter(format!(
            "measurement CSV header must be `x,y,count`, got `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = Vec::new();
    for row in rdr.deserialize::<MeasurementRow>() {
        let row = row?;
        let location = Point2::new(row.x, row.y);
        if !location.is_finite() || !(row.count >= 0.0 && row.count.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "invalid measurement row {},{},{}",
                row.x, row.y, row.count
            )));
        }
        out.push(FeatureMeasurement::new(location, row.count));
    }
    Ok(out)
}

pub fn write_measurements_csv<W: std::io::Write>(
    writer: W,
    measurements: &[FeatureMeasurement],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["x", "y", "count"])?;
    for m in measurements {
        w.write_record([
            m.location.x.to_string(),
            m.location.y.to_string(),
            m.feature_count.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Random starts in addition to the largest-count seeding.
    pub restarts: usize,
    pub max_iterations: usize,
    pub step_tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            restarts: 4,
            max_iterations: 200,
            step_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StartReport {
    pub initial_residual: f64,
    pub final_residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureFit {
    /// Fitted peaks with zero floor.
    pub density: GaussianMixtureDensity,
    /// Sum of squared residuals at the optimum.
    pub residual: f64,
    pub starts: Vec<StartReport>,
}

/// Least-squares fit of `k` Gaussian peaks to feature counts.
pub fn fit_mixture(measurements: &[FeatureMeasurement], k: usize, seed: u64) -> Result<MixtureFit> {
    fit_mixture_with(measurements, k, seed, &FitOptions::default())
}

pub fn fit_mixture_with(
    measurements: &[FeatureMeasurement],
    k: usize,
    seed: u64,
    options: &FitOptions,
) -> Result<MixtureFit> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if measurements.len() < 4 * k {
        return Err(Error::UnderdeterminedFit {
            measurements: measurements.len(),
            components: k,
            required: 4 * k,
        });
    }
    let (lo, hi) = measurements.iter().fold(
        (f64::INFINITY, f64::NEG_INFINITY),
        |(lo, hi), m| (lo.min(m.feature_count), hi.max(m.feature_count)),
    );
    if hi - lo <= 1e-12 * hi.abs().max(1.0) {
        return Err(Error::DegenerateMeasurements);
    }

    let problem = FitProblem { measurements };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts = vec![problem.seeded_start(k)];
    for _ in 0..options.restarts {
        starts.push(problem.random_start(k, &mut rng));
    }

    let mut best: Option<(DVector<f64>, f64)> = None;
    let mut reports = Vec::with_capacity(starts.len());
    for start in starts {
        let initial_residual = problem.cost(&start);
        let (theta, residual, iterations) = problem.levenberg_marquardt(start, options);
        reports.push(StartReport {
            initial_residual,
            final_residual: residual,
            iterations,
        });
        if best.as_ref().is_none_or(|(_, r)| residual < *r) {
            best = Some((theta, residual));
        }
    }
    let (theta, residual) = best.expect("at least one start");
    Ok(MixtureFit {
        density: GaussianMixtureDensity::new(unpack(&theta), 0.0)?,
        residual,
        starts: reports,
    })
}

/// Parameters packed as `[A, μx, μy, σ]` per component.
fn unpack(theta: &DVector<f64>) -> Vec<GaussianComponent> {
    theta
        .as_slice()
        .chunks_exact(4)
        .map(|c| GaussianComponent {
            amplitude: c[0],
            center: Point2::new(c[1], c[2]),
            sigma: c[3],
        })
        .collect()
}

fn admissible(theta: &DVector<f64>) -> bool {
    theta.iter().all(|v| v.is_finite())
        && theta
            .as_slice()
            .chunks_exact(4)
            .all(|c| c[0] > 0.0 && c[3] > 0.0)
}

struct FitProblem<'a> {
    measurements: &'a [FeatureMeasurement],
}

impl FitProblem<'_> {
    fn extent(&self) -> f64 {
        let first = self.measurements[0].location;
        let (lo, hi) = self.measurements.iter().fold((first, first), |(lo, hi), m| {
            let p = m.location;
            (
                Point2::new(lo.x.min(p.x), lo.y.min(p.y)),
                Point2::new(hi.x.max(p.x), hi.y.max(p.y)),
            )
        });
        (hi - lo).norm().max(1e-6)
    }

    /// Peaks at the `k` largest counts, skipping locations too close to an
    /// already chosen peak while alternatives remain.
    fn seeded_start(&self, k: usize) -> DVector<f64> {
        let sigma = self.extent() / (4.0 * (k as f64).sqrt());
        let mut order: Vec<usize> = (0..self.measurements.len()).collect();
        order.sort_by(|&a, &b| {
            self.measurements[b]
                .feature_count
                .total_cmp(&self.measurements[a].feature_count)
        });
        let mut chosen: Vec<usize> = Vec::with_capacity(k);
        for &idx in &order {
            if chosen.len() == k {
                break;
            }
            let p = self.measurements[idx].location;
            if chosen
                .iter()
                .all(|&c| self.measurements[c].location.distance(p) >= sigma)
            {
                chosen.push(idx);
            }
        }
        for &idx in &order {
            if chosen.len() == k {
                break;
            }
            if !chosen.contains(&idx) {
                chosen.push(idx);
            }
        }
        let max_count = self.measurements[order[0]].feature_count;
        let mut theta = Vec::with_capacity(4 * k);
        for idx in chosen {
            let m = self.measurements[idx];
            theta.extend_from_slice(&[
                m.feature_count.max(1e-3 * max_count),
                m.location.x,
                m.location.y,
                sigma,
            ]);
        }
        DVector::from_vec(theta)
    }

    fn random_start(&self, k: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
        let extent = self.extent();
        let max_count = self
            .measurements
            .iter()
            .map(|m| m.feature_count)
            .fold(0.0_f64, f64::max);
        let mut theta = Vec::with_capacity(4 * k);
        for _ in 0..k {
            let m = self.measurements[rng.gen_range(0..self.measurements.len())];
            let sigma = extent / (4.0 * (k as f64).sqrt()) * rng.gen_range(0.3..1.5);
            theta.extend_from_slice(&[
                m.feature_count.max(0.1 * max_count),
                m.location.x,
                m.location.y,
                sigma,
            ]);
        }
        DVector::from_vec(theta)
    }

    fn residuals(&self, theta: &DVector<f64>) -> DVector<f64> {
        let comps = unpack(theta);
        DVector::from_iterator(
            self.measurements.len(),
            self.measurements.iter().map(|m| {
                comps.iter().map(|c| c.eval(m.location)).sum::<f64>() - m.feature_count
            }),
        )
    }

    fn cost(&self, theta: &DVector<f64>) -> f64 {
        self.residuals(theta).norm_squared()
    }

    fn jacobian(&self, theta: &DVector<f64>) -> DMatrix<f64> {
        let comps = unpack(theta);
        let mut jac = DMatrix::zeros(self.measurements.len(), theta.len());
        for (row, m) in self.measurements.iter().enumerate() {
            for (c, comp) in comps.iter().enumerate() {
                let d = m.location - comp.center;
                let s2 = comp.sigma * comp.sigma;
                let e = (-d.norm_sq() / (2.0 * s2)).exp();
                let a = comp.amplitude;
                jac[(row, 4 * c)] = e;
                jac[(row, 4 * c + 1)] = a * e * d.x / s2;
                jac[(row, 4 * c + 2)] = a * e * d.y / s2;
                jac[(row, 4 * c + 3)] = a * e * d.norm_sq() / (s2 * comp.sigma);
            }
        }
        jac
    }

    /// Damped Gauss–Newton: damping ×10 on a rejected step, ÷10 on an accepted one.
    fn levenberg_marquardt(
        &self,
        mut theta: DVector<f64>,
        options: &FitOptions,
    ) -> (DVector<f64>, f64, usize) {
        let mut cost = self.cost(&theta);
        let mut lambda = 1e-3;
        let mut iterations = 0;
        while iterations < options.max_iterations {
            iterations += 1;
            let jac = self.jacobian(&theta);
            let r = self.residuals(&theta);
            let jtj = jac.transpose() * &jac;
            let grad = jac.transpose() * r;
            let max_diag = jtj.diagonal().max().max(f64::MIN_POSITIVE);
            let mut damped = jtj.clone();
            for d in 0..theta.len() {
                damped[(d, d)] += lambda * (jtj[(d, d)] + 1e-12 * max_diag);
            }
            let Some(chol) = damped.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let step = chol.solve(&(-grad));
            let candidate = &theta + &step;
            let small_step = step.norm() <= options.step_tol * (1.0 + theta.norm());
            if admissible(&candidate) {
                let candidate_cost = self.cost(&candidate);
                if candidate_cost <= cost {
                    theta = candidate;
                    cost = candidate_cost;
                    lambda = (lambda / 10.0).max(1e-15);
                    if small_step {
                        break;
                    }
                    continue;
                }
            }
            if small_step || lambda > 1e20 {
                break;
            }
            lambda *= 10.0;
        }
        (theta, cost, iterations)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid_samples(density: &GaussianMixtureDensity, per_axis: usize, side: f64) -> Vec<FeatureMeasurement> {
        let h = side / per_axis as f64;
        let mut out = Vec::new();
        for a in 0..per_axis {
            for b in 0..per_axis {
                let q = Point2::new((a as f64 + 0.5) * h, (b as f64 + 0.5) * h);
                out.push(FeatureMeasurement::new(q, density.eval(q)));
            }
        }
        out
    }

    #[test]
    fn eval_values() {
        let d = GaussianMixtureDensity::single(1.0, Point2::ZERO, 0.3).unwrap();
        assert_relative_eq!(d.eval(Point2::ZERO), 1.0);
        assert_relative_eq!(d.eval(Point2::new(0.3, 0.0)), (-0.5f64).exp(), epsilon = 1e-15);
        let c = d.components()[0];
        let twice = GaussianMixtureDensity::new(vec![c, c], 0.0).unwrap();
        let q = Point2::new(0.1, -0.2);
        assert_relative_eq!(twice.eval(q), 2.0 * d.eval(q), epsilon = 1e-15);
    }

    #[test]
    fn default_floor_is_relative_to_peak() {
        let c = GaussianComponent::new(500.0, Point2::ZERO, 0.2).unwrap();
        let d = GaussianMixtureDensity::with_default_floor(vec![c]).unwrap();
        assert_relative_eq!(d.floor(), 0.5);
        assert!(d.eval(Point2::new(100.0, 100.0)) > 0.0);
    }

    #[test]
    fn invalid_components_rejected() {
        assert!(GaussianComponent::new(0.0, Point2::ZERO, 1.0).is_err());
        assert!(GaussianComponent::new(1.0, Point2::ZERO, -1.0).is_err());
        assert!(GaussianMixtureDensity::new(vec![], 0.0).is_err());
    }

    #[test]
    fn json_round_trip_and_default_floor() {
        let text = r#"{"components":[{"amplitude":2.0,"center":[0.5,0.25],"sigma":0.1}]}"#;
        let d = GaussianMixtureDensity::from_json_str(text).unwrap();
        assert_relative_eq!(d.floor(), 2e-3);
        let back = GaussianMixtureDensity::from_json_str(&d.to_json_string().unwrap()).unwrap();
        assert_eq!(back, d);
        let bad = r#"{"components":[],"floor":1.0,"extra":3}"#;
        assert!(GaussianMixtureDensity::from_json_str(bad).is_err());
    }

    #[test]
    fn recovers_single_gaussian() {
        let truth = GaussianMixtureDensity::single(500.0, Point2::new(0.75, 0.75), 0.25).unwrap();
        let samples = grid_samples(&truth, 10, 1.5);
        assert_eq!(samples.len(), 100);
        let fit = fit_mixture(&samples, 1, 7).unwrap();
        let c = fit.density.components()[0];
        assert_relative_eq!(c.amplitude, 500.0, max_relative = 1e-2);
        assert_relative_eq!(c.center.x, 0.75, max_relative = 1e-2);
        assert_relative_eq!(c.center.y, 0.75, max_relative = 1e-2);
        assert_relative_eq!(c.sigma, 0.25, max_relative = 1e-2);
        for s in &fit.starts {
            assert!(fit.residual <= s.initial_residual);
            assert!(s.final_residual <= s.initial_residual);
        }
    }

    #[test]
    fn fitted_mixture_is_a_fixed_point() {
        let truth = GaussianMixtureDensity::single(3.0, Point2::new(0.4, 1.0), 0.3).unwrap();
        let fit = fit_mixture(&grid_samples(&truth, 8, 1.5), 1, 1).unwrap();
        let refit = fit_mixture(&grid_samples(&fit.density, 8, 1.5), 1, 2).unwrap();
        assert!(refit.residual <= 1e-8, "residual {}", refit.residual);
    }

    #[test]
    fn three_peaks_beat_one() {
        let comps = vec![
            GaussianComponent::new(300.0, Point2::new(0.35, 0.4), 0.15).unwrap(),
            GaussianComponent::new(200.0, Point2::new(1.1, 0.45), 0.2).unwrap(),
            GaussianComponent::new(250.0, Point2::new(0.75, 1.15), 0.15).unwrap(),
        ];
        let truth = GaussianMixtureDensity::new(comps, 0.0).unwrap();
        let samples = grid_samples(&truth, 12, 1.5);
        let one = fit_mixture(&samples, 1, 3).unwrap();
        let three = fit_mixture(&samples, 3, 3).unwrap();
        assert!(three.residual < one.residual);
        assert!(three.residual < 1e-6 * one.residual, "{} vs {}", three.residual, one.residual);
    }

    #[test]
    fn fit_errors() {
        let flat: Vec<_> = (0..10)
            .map(|k| FeatureMeasurement::new(Point2::new(k as f64 * 0.1, 0.0), 5.0))
            .collect();
        assert!(matches!(fit_mixture(&flat, 1, 0), Err(Error::DegenerateMeasurements)));
        assert!(matches!(
            fit_mixture(&flat[..3], 1, 0),
            Err(Error::UnderdeterminedFit { .. })
        ));
        assert!(matches!(
            fit_mixture(&flat, 3, 0),
            Err(Error::UnderdeterminedFit { .. })
        ));
    }

    #[test]
    fn measurement_csv() {
        let text = "x,y,count\n0.1,0.2,30\n0.5, 0.5, 12.5\n";
        let m = read_measurements_csv(text.as_bytes()).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m[1].feature_count, 12.5);
        let mut buf = Vec::new();
        write_measurements_csv(&mut buf, &m).unwrap();
        assert_eq!(read_measurements_csv(buf.as_slice()).unwrap(), m);
        assert!(read_measurements_csv("a,b,c\n1,2,3\n".as_bytes()).is_err());
        assert!(read_measurements_csv("x,y,count\n1,2,-3\n".as_bytes()).is_err());
        assert!(read_measurements_csv("".as_bytes()).is_err());
    }
}
