//! End-to-end runs of the binary: exit codes, diagnostics, artifacts.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn run(args: &[&str], config: Option<&Path>, out: &Path) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_dnaniso"));
    cmd.args(args).arg("--out").arg(out);
    if let Some(c) = config {
        cmd.arg("--config").arg(c);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("input.toml");
    fs::write(&path, text).unwrap();
    path
}

fn data_rows(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(str::to_string)
        .collect()
}

#[test]
fn lemmas_pass_for_selected_alphas() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["lemmas", "--alphas", "1,0.5,2", "--samples", "10000"], None, dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = data_rows(&dir.path().join("lemmas.csv"));
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r.ends_with(",true")), "{rows:?}");
}

#[test]
fn unit_exponent_is_rejected_with_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[problem]\nhorizon = 0.1\nalpha = 1.0\np = [1.0, 2.0]\n",
    );
    let out = run(&["solve"], Some(&cfg), &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("p must exceed 1"));
}

#[test]
fn unknown_key_names_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[problem]\nhorizon = 0.1\nalpha = 1.0\np = [2.0]\nbogus = 3\n",
    );
    let out = run(&["solve"], Some(&cfg), &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bogus") && err.contains("line 5"), "{err}");
}

#[test]
fn missing_config_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["solve"], None, dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn zero_data_gives_zero_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["solve"], Some(&configs().join("zero.toml")), dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for row in data_rows(&dir.path().join("trajectory_eps2.csv")) {
        let value: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
        assert_eq!(value, 0.0, "{row}");
    }
    assert!(dir.path().join("config.toml").exists());
}

#[test]
fn swapped_initial_data_fails_the_audit() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["compare"], Some(&configs().join("swapped.toml")), dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("exceeds"));
    assert!(!dir.path().join("comparison.csv").exists());
}

#[test]
fn comparison_pair_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["compare"], Some(&configs().join("comparison_pair.toml")), dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = data_rows(&dir.path().join("comparison.csv"));
    assert_eq!(rows.len(), 1);
    assert!(rows[0].ends_with(",true"));
}

#[test]
fn failed_check_exits_one() {
    // The exact solution is declared wrong, so the error check fails.
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[problem]\nhorizon = 0.02\nalpha = 1.0\np = [2.0]\nu0 = \"sin(pi*x)\"\nexact = \"0\"\n\
         [discretization]\nmodes_per_dim = 4\ndt = 5e-3\n\
         [schedule]\nepsilon = [0.1]\n\
         [checks]\nexact_error_tol = 1e-3\n",
    );
    let out = run(&["solve"], Some(&cfg), &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = data_rows(&dir.path().join("out/summary.csv"));
    assert!(summary.iter().any(|r| r.starts_with("exact_error_sup_l2") && r.ends_with(",false")));
}

#[test]
fn audit_flags_a_false_declaration() {
    // A field that depends on t while declared time independent.
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[problem]\nhorizon = 0.1\nalpha = 1.0\np = [2.0]\nfield = [\"(1+t)*xi1\"]\nlambda = 2.0\n\
         flags = { time_independent = true }\n",
    );
    let out = run(&["audit", "--samples", "500"], Some(&cfg), &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cfg = configs().join("zero.toml");
    for dir in [a.path(), b.path()] {
        assert_eq!(run(&["solve"], Some(&cfg), dir).status.code(), Some(0));
    }
    let mut names: Vec<_> = fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() > 3);
    for name in names {
        assert_eq!(fs::read(a.path().join(&name)).unwrap(), fs::read(b.path().join(&name)).unwrap());
    }
}
