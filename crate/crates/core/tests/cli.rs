//! Command-line behaviour: exit codes, outputs and byte-identical re-runs.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cograd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cograd")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_owned()
}

const SMALL: &str = r#"{
  "seed": 5,
  "spectrum": {"pris": 400, "trials": 2, "lambdas": [0.0, 0.5, 1.0], "warmup_pris": 100, "block": 100},
  "tracking": {"trials": 2},
  "passive_selection": {},
  "symbiotic": {"n_cpes": 8, "m": 4, "n_max": 2, "trials": 2}
}"#;

#[test]
fn run_writes_one_csv_per_experiment_and_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", SMALL);
    let out = dir.path().join("out");
    let o = cograd(&["run", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for stem in ["spectrum_5", "tracking_5", "passive_selection_5", "symbiotic_5"] {
        let text = fs::read_to_string(out.join(format!("{stem}.csv"))).unwrap();
        assert!(text.lines().count() > 2, "{stem}");
    }
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert!(report.to_string().contains("symbiotic"));
}

#[test]
fn experiment_seed_and_trial_flags_apply() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", SMALL);
    let out = dir.path().join("out");
    let o = cograd(&[
        "run", &cfg, "--experiment", "tracking", "--seed", "9", "--trials", "1", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("tracking_9.csv").exists());
    assert!(!out.join("spectrum_9.csv").exists());
    assert!(String::from_utf8_lossy(&o.stdout).contains("1 trial(s)"));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", SMALL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        assert!(cograd(&["run", &cfg, "--out", d.to_str().unwrap()]).status.success());
    }
    for stem in ["spectrum_5", "spectrum_timeseries_5", "tracking_5", "passive_selection_5", "symbiotic_5"] {
        let name = format!("{stem}.csv");
        assert_eq!(fs::read(a.join(&name)).unwrap(), fs::read(b.join(&name)).unwrap(), "{name}");
    }
}

#[test]
fn validate_reports_experiments() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", SMALL);
    let o = cograd(&["validate", &cfg]);
    assert!(o.status.success());
    assert_eq!(
        String::from_utf8_lossy(&o.stdout).trim(),
        "ok: spectrum, tracking, passive_selection, symbiotic"
    );
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("missing.json", None),
        ("syntax.json", Some("{ not json")),
        ("unknown.json", Some(r#"{"experiment": "bogus"}"#)),
        ("field.json", Some(r#"{"tracking": {"no_such_field": 1}}"#)),
        ("range.json", Some(r#"{"passive_selection": {"prior_std": [-1, 1, 1, 1]}}"#)),
        ("lambda.json", Some(r#"{"symbiotic": {"lambda_sym": 1.0}}"#)),
        ("absent.json", Some(r#"{"experiment": "tracking", "spectrum": {}}"#)),
    ];
    for (name, body) in cases {
        let path = match body {
            Some(b) => write(dir.path(), name, b),
            None => dir.path().join(name).to_str().unwrap().to_owned(),
        };
        let o = cograd(&["validate", &path]);
        assert_eq!(o.status.code(), Some(2), "{name}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let cfg = write(dir.path(), "ok.json", SMALL);
    let o = cograd(&["lambda-sweep", &cfg, "--from", "0", "--to", "1", "--steps", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn numerical_failures_exit_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "n.json",
        r#"{"experiment": "symbiotic", "symbiotic": {"n_cpes": 8, "m": 4, "trials": 2, "cpe": {"r0": [[1e-300, 0], [0, 1e-300]]}}}"#,
    );
    let out = dir.path().join("out");
    let o = cograd(&["run", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("numerical"));
}

#[test]
fn lambda_sweep_writes_the_requested_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", SMALL);
    let out = dir.path().join("out");
    let o = cograd(&[
        "lambda-sweep", &cfg, "--from", "0.2", "--to", "0.8", "--steps", "4", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut rdr = csv::Reader::from_path(out.join("spectrum_5.csv")).unwrap();
    let col = rdr.headers().unwrap().iter().position(|h| h == "lambda").unwrap();
    let mut lambdas: Vec<f64> = rdr.records().map(|r| r.unwrap()[col].parse().unwrap()).collect();
    lambdas.dedup();
    assert_eq!(lambdas.len(), 4);
    assert!((lambdas[0] - 0.2).abs() < 1e-12 && (lambdas[3] - 0.8).abs() < 1e-12);
}
