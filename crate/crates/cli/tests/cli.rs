use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use freeconv::{build_measure, MeasureSpec};
use tempfile::TempDir;

const SEMICIRCLE: &str = r#"{"components":[{"a":-2.0,"b":2.0,"t_minus":0.5,"t_plus":0.5,"h":[1.0],"weight":1.0}],"atoms":[],"centered":true}"#;
const BERNOULLI: &str = r#"{"components":[],"atoms":[{"x":-1.0,"mass":0.5},{"x":1.0,"mass":0.5}],"centered":true}"#;

fn freeconv(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_freeconv"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn setup() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("sc.json"), SEMICIRCLE).unwrap();
    fs::write(dir.path().join("bern.json"), BERNOULLI).unwrap();
    dir
}

fn json(path: PathBuf) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn missing_file_is_bad_input() {
    let dir = setup();
    let out = freeconv(dir.path(), &["convolve", "absent.json", "sc.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("absent.json"));
}

#[test]
fn invalid_measure_is_bad_input() {
    let dir = setup();
    fs::write(
        dir.path().join("bad.json"),
        r#"{"components":[{"a":1.0,"b":0.0,"t_minus":0.5,"t_plus":0.5,"h":[1.0],"weight":1.0}],"atoms":[],"centered":false}"#,
    )
    .unwrap();
    let out = freeconv(dir.path(), &["convolve", "bad.json", "sc.json"]);
    assert_eq!(out.status.code(), Some(1));
    let out = freeconv(dir.path(), &["semigroup", "sc.json", "--t", "0.5"]);
    assert_eq!(out.status.code(), Some(1));
    let out = freeconv(dir.path(), &["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn convolve_semicircles() {
    let dir = setup();
    let args = ["convolve", "sc.json", "sc.json", "--points", "401", "--out", "run/grid.csv"];
    let out = freeconv(dir.path(), &args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let support = json(dir.path().join("run/grid.support.json"));
    assert_eq!(support["components"].as_array().unwrap().len(), 1);
    assert_eq!(support["counts"]["I"], 1);

    let csv = fs::read_to_string(dir.path().join("run/grid.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("E,rho,im_omega_alpha,im_omega_beta,boundary_error"));
    assert_eq!(lines.count(), 401);

    let meta = json(dir.path().join("run/run_meta.json"));
    assert_eq!(meta["command"], "convolve");
    assert_eq!(meta["config"]["points"], 401);

    // Identical configuration, identical bytes.
    let again = freeconv(dir.path(), &["convolve", "sc.json", "sc.json", "--points", "401", "--out", "again.csv"]);
    assert_eq!(again.status.code(), Some(0));
    assert_eq!(csv, fs::read_to_string(dir.path().join("again.csv")).unwrap());
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = setup();
    let base = ["semigroup", "sc.json", "--t", "2", "--points", "301"];
    let one = freeconv(dir.path(), &[&base[..], &["--threads", "1", "--out", "one.csv"]].concat());
    let two = freeconv(dir.path(), &[&base[..], &["--threads", "2", "--out", "two.csv"]].concat());
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(two.status.code(), Some(0));
    assert_eq!(
        fs::read(dir.path().join("one.csv")).unwrap(),
        fs::read(dir.path().join("two.csv")).unwrap()
    );
}

#[test]
fn bernoulli_semigroup_is_arcsine() {
    let dir = setup();
    let args = [
        "semigroup", "bern.json", "--t", "2", "--allow-atomic", "--window", "-2.5", "2.5", "--points", "501", "--out",
        "arc.csv",
    ];
    let out = freeconv(dir.path(), &args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("arc.csv")).unwrap();
    assert!(csv.starts_with("E,rho,im_omega_t,boundary_error\n"));
    let rho0: f64 = csv
        .lines()
        .skip(1)
        .find_map(|l| {
            let mut f = l.split(',');
            (f.next()? == "0").then(|| f.next().unwrap().parse().unwrap())
        })
        .expect("grid contains 0");
    assert!((rho0 - 1.0 / (2.0 * std::f64::consts::PI)).abs() < 1e-3);

    let without = freeconv(dir.path(), &["semigroup", "bern.json", "--t", "2"]);
    assert_eq!(without.status.code(), Some(1));
}

#[test]
fn bounds_check_reports() {
    let dir = setup();
    let out = freeconv(dir.path(), &["bounds-check", "sc.json", "sc.json", "--points", "401", "--out", "b.json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(dir.path().join("b.json"));
    assert_eq!(report["kind"], "pair_one_cut");
    assert_eq!(report["measured"]["I"], 1);

    let out = freeconv(dir.path(), &["bounds-check", "sc.json", "--t", "3", "--points", "401", "--out", "s.json"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(dir.path().join("s.json"))["kind"], "semigroup");
}

#[test]
fn support_needs_t_for_one_measure() {
    let dir = setup();
    let out = freeconv(dir.path(), &["support", "sc.json"]);
    assert_eq!(out.status.code(), Some(1));
    let out = freeconv(dir.path(), &["support", "sc.json", "--t", "2", "--points", "301"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(dir.path().join("support.json"))["counts"]["I"], 1);
}

#[test]
fn rmt_smoke() {
    let dir = setup();
    let args = ["rmt-validate", "sc.json", "sc.json", "--size", "60", "--trials", "2", "--seed", "5", "--points", "401"];
    let out = freeconv(dir.path(), &args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(dir.path().join("rmt.json"));
    assert_eq!(report["eigenvalues"], 120);
    assert_eq!(report["seed"], 5);
}

#[test]
fn meta_spec_round_trips() {
    let dir = setup();
    let odd = r#"{"components":[{"a":-0.1234567890123,"b":0.98765432101,"t_minus":-0.33,"t_plus":0.7,"h":[1.0,0.25],"weight":0.9}],"atoms":[{"x":1.7,"mass":0.1}],"centered":false}"#;
    fs::write(dir.path().join("odd.json"), odd).unwrap();
    let out = freeconv(dir.path(), &["semigroup", "odd.json", "--t", "2", "--points", "301", "--out", "odd.csv"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let meta = json(dir.path().join("run_meta.json"));
    let written = MeasureSpec::from_json(&meta["inputs"][0]["spec"].to_string()).unwrap();
    let original = MeasureSpec::from_json(odd).unwrap();
    assert_eq!(written, original);
    let (a, b) = (build_measure(&written).unwrap(), build_measure(&original).unwrap());
    assert_eq!(a.to_spec(), b.to_spec());
}
