use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn photocov(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_photocov")).args(args).output().unwrap()
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn stderr_json(out: &Output) -> serde_json::Value {
    let text = String::from_utf8(out.stderr.clone()).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1, "expected one error line, got {text:?}");
    serde_json::from_str(lines[0]).unwrap()
}

const BASE: &str = r#"{
    "region": {"rectangle": {"min": [0, 0], "max": [1.5, 1.5]}},
    "density": {"components": [{"amplitude": 1, "center": [0.9, 0.7], "sigma": 0.3}]},
    "agents": {"count": 9, "init": "random"},
    "sensor": {"fov_radius": 0.5},
    "simulation": {"dt": 0.05, "k": 1.0, "max_steps": 5000, "convergence_eps": 1e-4, "seed": 1}
}"#;

fn write_scenario(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("scenario.json");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn simulate_bundled_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let out = photocov(&[
        "simulate",
        scenario("phi1_n9.json").to_str().unwrap(),
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["converged"], true);
    assert!(summary["final"]["h_h"].as_f64().unwrap() < summary["initial"]["h_h"].as_f64().unwrap());
    let trace = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(trace.starts_with("step,time,agent,x,y,u_norm\n"));
    let svg = std::fs::read_to_string(dir.path().join("trajectories.svg")).unwrap();
    assert!(svg.contains("stroke-dasharray") && svg.contains("id=\"partition\"") && svg.contains("id=\"density\""));
}

#[test]
fn missing_scenario_names_the_path() {
    let out = photocov(&["simulate", "/no/such/scenario.json"]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr_json(&out);
    assert!(err["message"].as_str().unwrap().contains("/no/such/scenario.json"));
}

#[test]
fn unstable_step_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_scenario(dir.path(), &BASE.replace("\"dt\": 0.05, \"k\": 1.0", "\"dt\": 0.5, \"k\": 2.0"));
    let out = photocov(&["simulate", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_json(&out)["message"].as_str().unwrap().contains("unstable step"));
}

#[test]
fn unknown_scenario_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_scenario(dir.path(), &BASE.replace("\"fov_radius\": 0.5", "\"fov_radius\": 0.5, \"tilt\": 1"));
    let out = photocov(&["eval-cost", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_json(&out)["message"].as_str().unwrap().contains("tilt"));
}

#[test]
fn single_agent_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_scenario(dir.path(), &BASE.replace("\"count\": 9", "\"count\": 1"));
    let out = photocov(&["compare", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_json(&out)["message"]
        .as_str()
        .unwrap()
        .contains("second-order coverage requires n >= 2"));
}

#[test]
fn compare_ranks_coverage_first() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let out = photocov(&[
        "compare",
        scenario("phi1_n9.json").to_str().unwrap(),
        "--out",
        report.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    for row in ["random", "grid", "coverage"] {
        assert!(stdout.contains(row));
    }
    let r: serde_json::Value = serde_json::from_slice(&std::fs::read(report).unwrap()).unwrap();
    let h: Vec<f64> = r["entries"].as_array().unwrap().iter().map(|e| e["h_h"].as_f64().unwrap()).collect();
    assert!(h[2] < h[0] && h[2] < h[1], "{h:?}");
    assert_eq!(r["lemma2_pass"], true);
}

fn write_measurements(dir: &Path, rows: &[(f64, f64, f64)]) -> PathBuf {
    let p = dir.join("m.csv");
    let mut text = String::from("x,y,count\n");
    for (x, y, c) in rows {
        text.push_str(&format!("{x},{y},{c}\n"));
    }
    std::fs::write(&p, text).unwrap();
    p
}

fn gaussian(a: f64, mx: f64, my: f64, s: f64, x: f64, y: f64) -> f64 {
    a * (-((x - mx).powi(2) + (y - my).powi(2)) / (2.0 * s * s)).exp()
}

fn lattice() -> impl Iterator<Item = (f64, f64)> {
    (0..12).flat_map(|i| (0..12).map(move |j| (0.0625 + 0.125 * i as f64, 0.0625 + 0.125 * j as f64)))
}

#[test]
fn fit_density_recovers_a_single_peak() {
    let dir = tempfile::tempdir().unwrap();
    let rows: Vec<_> = lattice().map(|(x, y)| (x, y, gaussian(80.0, 0.7, 0.8, 0.25, x, y))).collect();
    let csv = write_measurements(dir.path(), &rows);
    let out_path = dir.path().join("density.json");
    let out = photocov(&["fit-density", csv.to_str().unwrap(), "--k", "1", "--out", out_path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let d: serde_json::Value = serde_json::from_slice(&std::fs::read(&out_path).unwrap()).unwrap();
    let c = &d["components"][0];
    let close = |v: &serde_json::Value, t: f64| (v.as_f64().unwrap() - t).abs() <= 1e-2 * t;
    assert!(close(&c["amplitude"], 80.0) && close(&c["sigma"], 0.25));
    assert!(close(&c["center"][0], 0.7) && close(&c["center"][1], 0.8));
    assert!(dir.path().join("density.report.json").exists());
}

#[test]
fn fit_density_three_peaks_beat_one() {
    let dir = tempfile::tempdir().unwrap();
    let rows: Vec<_> = lattice()
        .map(|(x, y)| {
            let c = gaussian(50.0, 0.3, 0.3, 0.15, x, y)
                + gaussian(40.0, 1.1, 0.4, 0.2, x, y)
                + gaussian(60.0, 0.7, 1.2, 0.15, x, y);
            (x, y, c)
        })
        .collect();
    let csv = write_measurements(dir.path(), &rows);
    let residual = |k: &str| {
        let report = dir.path().join(format!("r{k}.json"));
        let out = photocov(&[
            "fit-density",
            csv.to_str().unwrap(),
            "--k",
            k,
            "--out",
            dir.path().join(format!("d{k}.json")).to_str().unwrap(),
            "--report",
            report.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        let r: serde_json::Value = serde_json::from_slice(&std::fs::read(report).unwrap()).unwrap();
        r["residual"].as_f64().unwrap()
    };
    assert!(residual("3") < residual("1"));
}

#[test]
fn fit_density_rejects_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "").unwrap();
    let out_path = dir.path().join("d.json");
    let out = photocov(&["fit-density", empty.to_str().unwrap(), "--out", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    stderr_json(&out);

    let few = write_measurements(dir.path(), &[(0.1, 0.1, 1.0), (0.2, 0.2, 2.0), (0.3, 0.3, 3.0)]);
    let out = photocov(&["fit-density", few.to_str().unwrap(), "--out", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_json(&out)["message"].as_str().unwrap().contains("underdetermined"));
}

#[test]
fn verify_suites_pass() {
    for (suite, trials) in [("bounds", "20"), ("conditions", "100"), ("gradient", "2"), ("lemma1", "2")] {
        let out = photocov(&["verify", "--suite", suite, "--trials", trials, "--seed", "5"]);
        assert!(out.status.success(), "{suite}: {}", String::from_utf8_lossy(&out.stderr));
        let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(report["passed"], true);
    }
}

#[test]
fn bounds_suite_reports_ratio_under_the_factor() {
    let out = photocov(&["verify", "--suite", "bounds", "--trials", "100", "--seed", "1"]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report["margins"]["max_ratio"].as_f64().unwrap() < 36.0);
}

#[test]
fn eval_cost_with_oracle() {
    let out = photocov(&["eval-cost", scenario("phi2_n16.json").to_str().unwrap(), "--oracle", "300"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let (exact, grid) = (v["h_h"].as_f64().unwrap(), v["oracle"]["h_h"].as_f64().unwrap());
    assert!((exact - grid).abs() < 0.02 * exact);
    assert!(v["h_g"].as_f64().unwrap() <= exact);
}

#[test]
fn invalid_thread_setting_is_an_input_error() {
    let out = Command::new(env!("CARGO_BIN_EXE_photocov"))
        .env("PHOTOCOV_THREADS", "many")
        .args(["verify", "--suite", "conditions", "--trials", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    stderr_json(&out);
}
