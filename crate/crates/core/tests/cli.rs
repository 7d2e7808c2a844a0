use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_aoi-routing");

const SMALL_SWEEP: &str = r#"
[experiment]
lambda1_min = 0.5
lambda1_max = 5.0
points = 3
replications = 3
events = 20000.0
"#;

const NO_BUFFER: &str = r#"
sources = [1.5, 4.0]
routing = [[0.3, 0.7], [0.5, 0.5]]

[[servers]]
mu = 1.0
theta = 0.5

[[servers]]
mu = 2.0

[sim]
horizon = 2000.0
replications = 4
"#;

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn stderr_json(out: &Output) -> Value {
    assert_eq!(out.status.code(), Some(2));
    serde_json::from_slice(&out.stderr).unwrap()
}

#[test]
fn list_json_has_every_experiment() {
    let v = stdout_json(&run(&["experiment", "list", "--json"]));
    let names: Vec<&str> = v.as_array().unwrap().iter().map(|e| e["name"].as_str().unwrap()).collect();
    assert_eq!(
        names,
        ["compare-nobuffer", "compare-buffer", "bound-tightness", "sim-validate", "game-converge", "mean-field"]
    );
    assert!(v[0]["description"].as_str().unwrap().len() > 10);
}

#[test]
fn plain_list_prints_one_line_each() {
    let out = run(&["experiment", "list"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 6);
}

#[test]
fn unknown_experiment_is_a_json_error() {
    let v = stderr_json(&run(&["experiment", "run", "nope"]));
    assert_eq!(v["error"], "unknown-experiment");
    assert_eq!(v["valid"].as_array().unwrap().len(), 6);
}

#[test]
fn sweeps_are_reproducible_to_the_byte() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "sweep.toml", SMALL_SWEEP);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let out = run(&["--config", &cfg, "experiment", "run", "sim-validate", "-o", path.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let (a, b) = (std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("lambda1,shs,sim_mean,ci95,within_ci,note\n"));
    assert_eq!(text.lines().count(), 4);

    let other = run(&["--config", &cfg, "--seed", "7", "experiment", "run", "sim-validate"]);
    assert!(other.status.success());
    assert_ne!(other.stdout, b);
}

#[test]
fn solve_reports_exact_and_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "net.toml", NO_BUFFER);
    let v = stdout_json(&run(&["--config", &cfg, "solve"]));
    assert_eq!(v["kind"], "two-parallel-no-buffer");
    let pi: Vec<f64> = serde_json::from_value(v["pi"].clone()).unwrap();
    let closed: Vec<f64> = serde_json::from_value(v["closed_form_pi"].clone()).unwrap();
    for (a, b) in pi.iter().zip(&closed) {
        assert!((a - b).abs() < 1e-12);
    }
    assert!(v["average_aoi"].as_f64().unwrap() > 0.0);
    // losses put the network outside the bound
    assert!(v["upper_bound"].is_null());
}

#[test]
fn bound_rejects_losses() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "net.toml", NO_BUFFER);
    assert_eq!(stderr_json(&run(&["--config", &cfg, "bound"]))["error"], "domain");
}

#[test]
fn simulate_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "net.toml", NO_BUFFER);
    let v = stdout_json(&run(&["--config", &cfg, "simulate"]));
    assert_eq!(v["seed"], 42);
    assert_eq!(v["replications"].as_array().unwrap().len(), 4);

    let out = run(&["--config", &cfg, "simulate", "--trace", "5"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5);
    let mut last = 0.0;
    for l in lines {
        let fields: Vec<&str> = l.split('\t').collect();
        assert_eq!(fields.len(), 3);
        let t: f64 = fields[0].parse().unwrap();
        assert!(t >= last);
        last = t;
        assert!(["1", "2"].contains(&fields[1]));
    }
}

#[test]
fn game_and_mean_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "net.toml", NO_BUFFER);
    let v = stdout_json(&run(&["--config", &cfg, "game"]));
    assert_eq!(v["converged"], true);
    assert_eq!(v["routing"].as_array().unwrap().len(), 2);
    let v = stdout_json(&run(&["--config", &cfg, "game", "--mean-field"]));
    assert_eq!(v["converged"], true);
    let m: Vec<f64> = serde_json::from_value(v["m"].clone()).unwrap();
    assert!((m.iter().sum::<f64>() - 1.0).abs() < 1e-9);
}

#[test]
fn config_problems_exit_with_code_two() {
    assert_eq!(stderr_json(&run(&["solve"]))["error"], "config");
    assert_eq!(stderr_json(&run(&["--config", "/nonexistent.toml", "solve"]))["error"], "io");
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.toml", "sources = [1.0]\nbogus = 3\n");
    assert_eq!(stderr_json(&run(&["--config", &bad, "solve"]))["error"], "config");
}
