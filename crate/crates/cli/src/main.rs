//! `photocov`: simulations, density fits, baseline comparisons and
//! verification suites for second-order photogrammetric coverage.

mod scenario;
mod svg;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use photocov_core::cost::{bound_factors, both_costs};
use photocov_core::density::{fit_mixture, read_measurements_csv, GaussianComponent};
use photocov_core::experiments::{
    compare_configurations, oracle_cost, verify_bounds, verify_conditions, verify_gradient, verify_lemma1,
    ConfigurationKind, GridOracleSpec, Suite, SuiteReport, SuiteSetup,
};
use photocov_core::geometry::order_two_voronoi;
use photocov_core::quadrature::QuadratureSpec;
use photocov_core::simulator::{run, write_summary_csv, write_trace_csv};
use photocov_core::Error;
use scenario::{Scenario, ScenarioError};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "photocov", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the controller from a scenario and write traces, a summary and a figure.
    Simulate {
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Least-squares fit of a Gaussian mixture to an `x,y,count` CSV.
    FitDensity {
        measurements: PathBuf,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Residual report; defaults to `<out>` with a `.report.json` suffix.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Compare random, grid and converged configurations.
    Compare {
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Report path; defaults to `comparison.json` in the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Randomized numerical checks of the coverage results.
    Verify {
        #[arg(long, value_enum)]
        suite: SuiteArg,
        /// Random instances; the conditions suite draws 1000 triples per trial.
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Costs of a scenario's initial configuration.
    EvalCost {
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Also evaluate the grid oracle at this resolution.
        #[arg(long)]
        oracle: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Bounds,
    Lemma1,
    Gradient,
    Conditions,
}

/// Failure carrying its exit code.
struct Failure {
    code: u8,
    kind: &'static str,
    message: String,
    detail: Option<serde_json::Value>,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            kind: "input",
            message: message.into(),
            detail: None,
        }
    }

    fn simulation(e: Error) -> Self {
        Self {
            code: 2,
            kind: "simulation",
            message: e.to_string(),
            detail: None,
        }
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        Failure::input(e.to_string())
    }
}

fn io_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure {
        code: 2,
        kind: "io",
        message: format!("cannot write {}: {e}", path.display()),
        detail: None,
    }
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| io_failure(path, e))
}

fn pretty<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s.into_bytes()
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("PHOTOCOV_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .map_err(|_| Failure::input(format!("PHOTOCOV_THREADS must be a non-negative integer, got `{raw}`")))?;
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Failure::input(format!("cannot configure thread pool: {e}")))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SimulationSummary<'a> {
    scenario: &'a scenario::ScenarioFile,
    seed: u64,
    agent_count: usize,
    converged: bool,
    steps: usize,
    final_time: f64,
    initial: CostSnapshot,
    #[serde(rename = "final")]
    final_: CostSnapshot,
    upper_factor: f64,
    final_positions: &'a [photocov_core::geometry::Point2],
    files: [&'static str; 4],
}

#[derive(Serialize)]
struct CostSnapshot {
    h_g: f64,
    h_h: f64,
    max_u: f64,
}

fn cmd_simulate(path: &Path, seed: Option<u64>, out_dir: Option<PathBuf>) -> Result<(), Failure> {
    let scenario = Scenario::load(path)?.with_seed(seed);
    let initial = scenario.initial_configuration()?;
    let spec = QuadratureSpec::default();
    let trace = run(&initial, &scenario.region, &scenario.density, &scenario.config, &spec)
        .map_err(Failure::simulation)?;
    let partition = order_two_voronoi(trace.final_positions(), &scenario.region).map_err(Failure::simulation)?;
    let dir = out_dir.unwrap_or_else(|| scenario.file.output.directory.clone());

    let mut trace_csv = Vec::new();
    write_trace_csv(&mut trace_csv, &trace).map_err(Failure::simulation)?;
    let mut summary_csv = Vec::new();
    write_summary_csv(&mut summary_csv, &trace).map_err(Failure::simulation)?;
    let snapshot = |r: &photocov_core::simulator::TraceRecord| CostSnapshot {
        h_g: r.h_g,
        h_h: r.h_h,
        max_u: r.max_u,
    };
    let upper = bound_factors(scenario.config.fov_radius, scenario.region.diameter().map_err(Failure::simulation)?)
        .map(|b| b.upper_factor)
        .unwrap_or(f64::INFINITY);
    let files = ["trace.csv", "summary.csv", "summary.json", "trajectories.svg"];
    let summary = SimulationSummary {
        scenario: &scenario.file,
        seed: scenario.config.seed,
        agent_count: scenario.agent_count(),
        converged: trace.converged,
        steps: trace.steps,
        final_time: trace.last().time,
        initial: snapshot(trace.initial()),
        final_: snapshot(trace.last()),
        upper_factor: upper,
        final_positions: trace.final_positions(),
        files,
    };
    write_file(&dir.join(files[0]), &trace_csv)?;
    write_file(&dir.join(files[1]), &summary_csv)?;
    write_file(&dir.join(files[2]), &pretty(&summary))?;
    let figure = svg::render(&scenario.region, &scenario.density, &trace, &partition);
    write_file(&dir.join(files[3]), figure.as_bytes())?;

    println!(
        "converged={} steps={} H_h: {:.6} -> {:.6}  H_g: {:.6} -> {:.6}",
        trace.converged,
        trace.steps,
        trace.initial().h_h,
        trace.last().h_h,
        trace.initial().h_g,
        trace.last().h_g
    );
    println!("wrote {}", dir.display());
    Ok(())
}

#[derive(Serialize)]
struct FitReport<'a> {
    measurements: usize,
    k: usize,
    seed: u64,
    residual: f64,
    components: &'a [GaussianComponent],
    starts: &'a [photocov_core::density::StartReport],
}

#[derive(Serialize)]
struct DensityDocument<'a> {
    components: &'a [GaussianComponent],
}

fn cmd_fit_density(csv: &Path, k: usize, seed: u64, out: &Path, report: Option<PathBuf>) -> Result<(), Failure> {
    let file = fs::File::open(csv).map_err(|e| Failure::input(format!("cannot read {}: {e}", csv.display())))?;
    let measurements =
        read_measurements_csv(file).map_err(|e| Failure::input(format!("{}: {e}", csv.display())))?;
    let fit = fit_mixture(&measurements, k, seed).map_err(|e| Failure::input(e.to_string()))?;
    // the floor is left out so that loading applies the default simulation floor
    write_file(out, &pretty(&DensityDocument { components: fit.density.components() }))?;
    let report_path = report.unwrap_or_else(|| {
        let mut name = out.file_stem().unwrap_or_default().to_os_string();
        name.push(".report.json");
        out.with_file_name(name)
    });
    let rep = FitReport {
        measurements: measurements.len(),
        k,
        seed,
        residual: fit.residual,
        components: fit.density.components(),
        starts: &fit.starts,
    };
    write_file(&report_path, &pretty(&rep))?;
    for (i, c) in fit.density.components().iter().enumerate() {
        println!(
            "component {i}: amplitude={} center=({}, {}) sigma={}",
            c.amplitude, c.center.x, c.center.y, c.sigma
        );
    }
    println!("residual={}", fit.residual);
    Ok(())
}

fn cmd_compare(path: &Path, seed: Option<u64>, out: Option<PathBuf>) -> Result<(), Failure> {
    let scenario = Scenario::load(path)?.with_seed(seed);
    let report = compare_configurations(
        scenario.agent_count(),
        &scenario.region,
        &scenario.density,
        scenario.config.fov_radius,
        &scenario.config,
        &QuadratureSpec::default(),
    )
    .map_err(Failure::simulation)?;
    let out = out.unwrap_or_else(|| scenario.file.output.directory.join("comparison.json"));
    write_file(&out, &pretty(&report))?;
    println!("{:<10} {:>14} {:>14} {:>6}", "config", "H_h", "H_g", "empty");
    for kind in [ConfigurationKind::Random, ConfigurationKind::Grid, ConfigurationKind::Coverage] {
        let e = report.entry(kind);
        let name = serde_json::to_value(kind).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        println!("{name:<10} {:>14.6} {:>14.6} {:>6}", e.h_h, e.h_g, e.empty_cells);
    }
    println!("bounds hold: {}  (1/beta^2 = {})", report.lemma2_pass, report.bounds.upper_factor);
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_verify(suite: SuiteArg, trials: usize, seed: u64) -> Result<(), Failure> {
    let setup = SuiteSetup::default();
    let report: SuiteReport = match suite {
        SuiteArg::Bounds => verify_bounds(&setup, trials, seed),
        SuiteArg::Lemma1 => verify_lemma1(&setup, trials, 10, 500, seed),
        SuiteArg::Gradient => verify_gradient(trials, seed),
        SuiteArg::Conditions => verify_conditions(&setup, trials * 1000, seed).map(|(r, _)| r),
    }
    .map_err(Failure::simulation)?;
    println!("{}", serde_json::to_string_pretty(&report).expect("reports serialize"));
    if report.passed {
        return Ok(());
    }
    let name = match report.suite {
        Suite::Bounds => "bounds",
        Suite::Lemma1 => "lemma1",
        Suite::Gradient => "gradient",
        Suite::Conditions => "conditions",
    };
    Err(Failure {
        code: 3,
        kind: "violation",
        message: format!("{name} suite: {} violating instance(s)", report.violations.len().max(1)),
        detail: report.violations.first().and_then(|v| serde_json::to_value(v).ok()),
    })
}

fn cmd_eval_cost(path: &Path, seed: Option<u64>, oracle: Option<usize>) -> Result<(), Failure> {
    let scenario = Scenario::load(path)?.with_seed(seed);
    let agents = scenario.initial_configuration()?;
    let spec = QuadratureSpec::default();
    let partition = order_two_voronoi(agents.positions(), &scenario.region).map_err(Failure::simulation)?;
    let costs = both_costs(
        agents.positions(),
        &partition,
        &scenario.density,
        scenario.config.fov_radius,
        &spec,
    )
    .map_err(Failure::simulation)?;
    let mut out = serde_json::json!({
        "positions": agents.positions(),
        "h_g": costs.h_g,
        "h_h": costs.h_h,
        "empty_cells": partition.empty_count(),
    });
    if let Some(resolution) = oracle {
        let grid = GridOracleSpec::new(resolution, 0).map_err(|e| Failure::input(e.to_string()))?;
        let sensor = photocov_core::cost::SensorModel::photogrammetry_for(&scenario.region, scenario.config.fov_radius)
            .map_err(|e| Failure::input(e.to_string()))?;
        let run = |s| oracle_cost(agents.positions(), &scenario.region, &scenario.density, s, &grid);
        out["oracle"] = serde_json::json!({
            "resolution": resolution,
            "h_g": run(&photocov_core::cost::SensorModel::Auxiliary).map_err(Failure::simulation)?,
            "h_h": run(&sensor).map_err(Failure::simulation)?,
        });
    }
    println!("{}", serde_json::to_string_pretty(&out).expect("json values serialize"));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Simulate { scenario, seed, out_dir } => cmd_simulate(&scenario, seed, out_dir),
        Command::FitDensity {
            measurements,
            k,
            seed,
            out,
            report,
        } => cmd_fit_density(&measurements, k, seed, &out, report),
        Command::Compare { scenario, seed, out } => cmd_compare(&scenario, seed, out),
        Command::Verify { suite, trials, seed } => cmd_verify(suite, trials, seed),
        Command::EvalCost { scenario, seed, oracle } => cmd_eval_cost(&scenario, seed, oracle),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let mut err = serde_json::json!({ "error": f.kind, "code": f.code, "message": f.message });
            if let Some(d) = f.detail {
                err["instance"] = d;
            }
            eprintln!("{err}");
            ExitCode::from(f.code)
        }
    }
}
