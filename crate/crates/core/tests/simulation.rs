use photocov_core::cost::bound_factors;
use photocov_core::density::{fit_mixture, FeatureMeasurement, GaussianComponent, GaussianMixtureDensity, UniformDensity};
use photocov_core::experiments::{compare_configurations, ConfigurationKind};
use photocov_core::geometry::{ConvexPolygon, Point2};
use photocov_core::quadrature::QuadratureSpec;
use photocov_core::simulator::{random_configuration, run, SimulationConfig};

fn square() -> ConvexPolygon {
    ConvexPolygon::square(1.5).unwrap()
}

fn peaks() -> GaussianMixtureDensity {
    GaussianMixtureDensity::with_default_floor(vec![
        GaussianComponent::new(1.0, Point2::new(0.4, 0.4), 0.2).unwrap(),
        GaussianComponent::new(0.8, Point2::new(1.1, 0.5), 0.25).unwrap(),
        GaussianComponent::new(1.2, Point2::new(0.7, 1.15), 0.2).unwrap(),
    ])
    .unwrap()
}

#[test]
fn traces_descend_stay_inside_and_respect_the_bounds() {
    let q = square();
    let d = peaks();
    let spec = QuadratureSpec::default();
    let upper = bound_factors(0.5, q.diameter().unwrap()).unwrap().upper_factor;
    for seed in 0..20u64 {
        let n = [9, 16, 20][seed as usize % 3];
        let cfg = SimulationConfig {
            seed,
            max_steps: 60,
            cost_record_stride: 1 + seed as usize % 3,
            ..SimulationConfig::default()
        };
        let t = run(&random_configuration(n, &q, seed).unwrap(), &q, &d, &cfg, &spec).unwrap();
        assert!(t.max_auxiliary_increase() <= 1e-8, "seed {seed}");
        assert_eq!(t.last().step, t.steps);
        for r in &t.records {
            assert!(r.positions.iter().all(|p| q.contains(*p, 0.0)));
            assert!(r.h_g <= r.h_h && r.h_h <= upper * r.h_g * (1.0 + 1e-9));
        }
    }
}

#[test]
fn runs_are_deterministic() {
    let q = square();
    let cfg = SimulationConfig {
        max_steps: 40,
        seed: 9,
        ..SimulationConfig::default()
    };
    let init = random_configuration(9, &q, 9).unwrap();
    let spec = QuadratureSpec::default();
    let a = run(&init, &q, &peaks(), &cfg, &spec).unwrap();
    let b = run(&init, &q, &peaks(), &cfg, &spec).unwrap();
    assert_eq!(a, b);
}

#[test]
fn single_peak_run_converges() {
    let q = square();
    let d = GaussianMixtureDensity::with_default_floor(vec![GaussianComponent::new(1.0, Point2::new(0.9, 0.7), 0.3).unwrap()])
        .unwrap();
    let cfg = SimulationConfig {
        max_steps: 2000,
        cost_record_stride: 25,
        ..SimulationConfig::default()
    };
    let t = run(&random_configuration(9, &q, 4).unwrap(), &q, &d, &cfg, &QuadratureSpec::default()).unwrap();
    assert!(t.converged && t.steps <= 2000);
    assert!(t.last().h_h < t.initial().h_h);
}

#[test]
fn uniform_four_agents_settle_to_the_same_cost() {
    let q = square();
    let spec = QuadratureSpec::default();
    let costs: Vec<f64> = (0..5)
        .map(|seed| {
            let cfg = SimulationConfig {
                seed,
                cost_record_stride: 50,
                ..SimulationConfig::default()
            };
            let r = compare_configurations(4, &q, &UniformDensity(1.0), 0.5, &cfg, &spec).unwrap();
            assert!(r.lemma2_pass);
            r.entry(ConfigurationKind::Coverage).h_g
        })
        .collect();
    let lo = costs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = costs.iter().copied().fold(0.0, f64::max);
    assert!((hi - lo) / lo <= 1e-3, "{costs:?}");
}

#[test]
fn fitted_residual_beats_every_start() {
    let truth = [
        GaussianComponent::new(40.0, Point2::new(0.3, 0.4), 0.15).unwrap(),
        GaussianComponent::new(25.0, Point2::new(1.1, 1.0), 0.25).unwrap(),
    ];
    let m: Vec<FeatureMeasurement> = (0..15)
        .flat_map(|i| (0..15).map(move |j| Point2::new(0.05 + 0.1 * i as f64, 0.05 + 0.1 * j as f64)))
        .map(|p| FeatureMeasurement::new(p, truth.iter().map(|c| c.eval(p)).sum::<f64>() + 0.3 * (7.0 * p.x).sin()))
        .collect();
    let fit = fit_mixture(&m, 2, 1).unwrap();
    for s in &fit.starts {
        assert!(s.final_residual <= s.initial_residual);
        assert!(fit.residual <= s.final_residual);
    }
}
