use std::path::Path;
use std::process::{Command, Output};

fn fracstep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracstep")).args(args).output().expect("spawn fracstep")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const SMALL: &str = r#"{
  "name": "small",
  "cases": [{
    "label": "only",
    "problem": {"domain": "interval", "alpha": [0.5], "t_final": 1.0, "initial": {"kind": "sine_mode", "m": 1}},
    "space": {"cells": [16]},
    "time": {"schemes": ["bdf2"], "corrected": true, "steps": [10, 20, 40]},
    "reference": {"kind": "discrete_eigen"},
    "error": "relative"
  }]
}"#;

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("cfg.json");
    std::fs::write(&p, body).unwrap();
    p.display().to_string()
}

#[test]
fn mlf_prints_plain_decimals() {
    let o = fracstep(&["mlf", "--alpha", "1", "--x", "-1", "--x", "0"]);
    assert!(o.status.success());
    let vals: Vec<f64> = stdout(&o).lines().map(|l| l.parse().unwrap()).collect();
    assert!((vals[0] - (-1f64).exp()).abs() < 1e-14);
    assert_eq!(vals[1], 1.0);
}

#[test]
fn mlf_reads_argument_list() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("xs.txt");
    std::fs::write(&p, "-1\n\n-2\n").unwrap();
    let o = fracstep(&["mlf", "--alpha", "0.5", "--x-list", p.to_str().unwrap()]);
    assert!(o.status.success());
    let vals: Vec<f64> = stdout(&o).lines().map(|l| l.parse().unwrap()).collect();
    assert_eq!(vals.len(), 2);
    // E_{1/2}(-x) = exp(x^2) erfc(x)
    assert!((vals[0] - 0.4275835761558070).abs() < 1e-13);
}

#[test]
fn weights_match_closed_forms() {
    let o = fracstep(&["weights", "--scheme", "bdf1", "--alpha", "0.5", "--n", "2"]);
    let b: Vec<f64> = stdout(&o).lines().map(|l| l.parse().unwrap()).collect();
    assert_eq!(b.len(), 3);
    assert!((b[0] - 1.0).abs() < 1e-14 && (b[1] + 0.5).abs() < 1e-14 && (b[2] + 0.125).abs() < 1e-14);
    let o = fracstep(&["weights", "--scheme", "l1", "--alpha", "0.5", "--n", "2"]);
    let b: Vec<f64> = stdout(&o).lines().map(|l| l.parse().unwrap()).collect();
    assert_eq!(b.len(), 2);
    assert!((b[0] - 1.128379).abs() < 1e-6);
}

#[test]
fn usage_and_config_errors_exit_64() {
    assert_eq!(fracstep(&["weights", "--scheme", "bdf7", "--alpha", "0.5", "--n", "2"]).status.code(), Some(64));
    assert_eq!(fracstep(&["frobnicate"]).status.code(), Some(64));
    assert_eq!(fracstep(&["run", "--config", "/nonexistent/x.json"]).status.code(), Some(64));
    assert_eq!(fracstep(&["--help"]).status.code(), Some(0));
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "{ not json");
    assert_eq!(fracstep(&["run", "--config", &cfg]).status.code(), Some(64));
    let cfg = write_config(dir.path(), &SMALL.replace("[10, 20, 40]", "[20, 10]"));
    assert_eq!(fracstep(&["run", "--config", &cfg]).status.code(), Some(64));
}

#[test]
fn run_writes_deterministic_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");
    let o = fracstep(&["run", "--config", &cfg, "--out", out.to_str().unwrap(), "--jobs", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("small.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "alpha,scheme,corrected,N,h,error,rate");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].ends_with(','), "first rate empty: {}", lines[1]);
    let rate: f64 = lines[3].rsplit(',').next().unwrap().parse().unwrap();
    assert!((rate - 2.0).abs() < 0.15, "{rate}");
    let again = fracstep(&["run", "--config", &cfg, "--jobs", "1"]);
    assert_eq!(stdout(&again), csv);
}

#[test]
fn overrides_and_markdown() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let o = fracstep(&["run", "--config", &cfg, "--format", "md", "--set", "time.steps=[10]", "--set", "name=renamed"]);
    assert!(o.status.success());
    let md = stdout(&o);
    assert!(md.starts_with("# renamed"));
    assert!(md.contains('|'));
}

#[test]
fn failed_cells_exit_2() {
    // Corrected schemes need f(0), which is unbounded for this source.
    let bad = SMALL.replace(
        r#""initial": {"kind": "sine_mode", "m": 1}"#,
        r#""source": [{"time": {"kind": "power", "gamma": -0.2, "c": 1.0}, "space": {"kind": "sine_mode", "m": 1}}]"#,
    );
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &bad);
    let o = fracstep(&["run", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("FAILED"));
}

#[test]
fn profile_emits_csv() {
    let o = fracstep(&["profile", "--config", "profiles", "--times", "0.1,1", "--points", "11", "--case", "sine"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = stdout(&o);
    let lines: Vec<&str> = s.lines().collect();
    assert_eq!(lines[0], "case,alpha,t,x,u");
    assert_eq!(lines.len(), 1 + 2 * 11);
    let mid: Vec<&str> = lines[6].split(',').collect();
    assert_eq!(mid[3], "0.5");
    let u: f64 = mid[4].parse().unwrap();
    // sqrt(2) E_{1/2}(-pi^2 0.1^{1/2}) for the normalized first mode
    let want = 0.2441566330;
    assert!((u - want).abs() < 1e-8, "{u}");
}
