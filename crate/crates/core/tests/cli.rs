//! End-to-end runs of the `ma` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ma(cmd: &str, config: &str, dir: &Path, out: &str) -> Output {
    let cfg = dir.join(format!("{out}.cfg"));
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_ma")).arg(cmd).arg("--config").arg(&cfg).arg("--out").arg(dir.join(out)).output().unwrap()
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

const DISK: &str = "domain = disk\nrhs = linear\ngrid.h = 1/32\n";

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for cmd in ["sweep", "check", "barrier"] {
        let a = ma(cmd, DISK, dir.path(), &format!("{cmd}_a"));
        let b = ma(cmd, DISK, dir.path(), &format!("{cmd}_b"));
        assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stdout));
        assert_eq!(a.stdout, b.stdout);
        let (fa, fb) = (files(&dir.path().join(format!("{cmd}_a"))), files(&dir.path().join(format!("{cmd}_b"))));
        assert!(!fa.is_empty());
        assert_eq!(fa, fb, "{cmd}");
    }
}

#[test]
fn sweep_on_symmetric_instance_reports_zero_lambda_bar() {
    let dir = tempfile::tempdir().unwrap();
    let out = ma("sweep", DISK, dir.path(), "o");
    assert_eq!(out.status.code(), Some(0));
    let manifest = fs::read_to_string(dir.path().join("o/manifest.txt")).unwrap();
    assert!(manifest.lines().any(|l| l.starts_with("lambda_bar") && l.trim_end().ends_with('0')), "{manifest}");
    let csv = fs::read_to_string(dir.path().join("o/sweep.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "lambda,max_U,max_V,argmax_x1,argmax_x2");
    assert_eq!(csv.lines().count(), 65);
}

#[test]
fn validate_reports_second_order() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "case = radial-coupled-linear\nvalidate.cases = radial-coupled-linear\nvalidate.h = 1/32, 1/64, 1/128\n";
    let out = ma("validate", cfg, dir.path(), "v");
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let table = fs::read_to_string(dir.path().join("v/convergence.csv")).unwrap();
    let orders: Vec<f64> = table.lines().skip(1).filter_map(|l| l.rsplit(',').next()?.parse().ok()).collect();
    assert_eq!(orders.len(), 2);
    assert!(orders.iter().all(|o| (1.8..=2.2).contains(o)), "{orders:?}");
}

#[test]
fn injected_increasing_field_fails_with_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = ma("sweep", &format!("{DISK}sweep.inject_u = x1\n"), dir.path(), "neg");
    assert_eq!(out.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("verdict monotonicity_u: fail"), "{stdout}");
}

#[test]
fn failing_hypothesis_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(ma("check", "rhs = negexp\n", dir.path(), "n").status.code(), Some(1));
    assert_eq!(ma("check", "rhs = exp\n", dir.path(), "e").status.code(), Some(0));
}

#[test]
fn config_errors_exit_two_with_one_line() {
    let dir = tempfile::tempdir().unwrap();
    for (name, cfg) in [("unknown", "domain = disk\ncolour = red\n"), ("dup", "rhs = linear\nrhs = exp\n"), ("badval", "grid.h = -1\n")] {
        let out = ma("solve", cfg, dir.path(), name);
        assert_eq!(out.status.code(), Some(2), "{name}");
        let err = String::from_utf8_lossy(&out.stderr);
        assert_eq!(err.lines().count(), 1, "{err}");
        assert!(err.starts_with("error: ConfigError: "), "{err}");
    }
    let missing = Command::new(env!("CARGO_BIN_EXE_ma")).args(["solve", "--config", "/nonexistent/x.cfg"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).starts_with("error: IOError: "));
}

#[test]
fn reflected_difference_heatmaps_are_nonpositive() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "domain = disk\ncase = radial-coupled-linear\nrhs = linear\nboundary = quadratic\ngrid.h = 1/32\n";
    assert_eq!(ma("sweep", cfg, dir.path(), "h").status.code(), Some(0));
    for k in 1..=3 {
        let svg = fs::read_to_string(dir.path().join(format!("h/heatmap_U_{k}.svg"))).unwrap();
        let max: f64 = svg
            .lines()
            .find_map(|l| l.split(">max ").nth(1))
            .and_then(|s| s.split('<').next())
            .and_then(|s| s.parse().ok())
            .expect("max label");
        assert!(max <= 1e-12, "heatmap {k}: max {max}");
    }
}
