use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use influential_bandit::{Instance, InteractionMatrix, NoiseModel};
use serde_json::Value;

fn ibandit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ibandit")).args(args).output().unwrap()
}

fn ok(args: &[&str]) {
    let out = ibandit(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

#[test]
fn counterexample_fixed_arm_total() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r");
    ok(&["run", "--instance", "prop2", "--policy", "fixed:1", "--T", "100", "--out", out.to_str().unwrap()]);
    let s = json(&out.join("summary.json"));
    assert_eq!(s["total_expected_loss"].as_f64().unwrap(), 5050.0);
    assert_eq!(csv_rows(&out.join("trace.csv")).len(), 100);
}

#[test]
fn linear_regret_second_arm_total() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r");
    ok(&["run", "--instance", "prop3", "--policy", "fixed:2", "--T", "8", "--out", out.to_str().unwrap()]);
    let s = json(&out.join("summary.json"));
    assert_eq!(s["total_expected_loss"].as_f64().unwrap(), 8.0);
    assert!(s["regret"].as_f64().unwrap().abs() < 1e-9);
}

#[test]
fn same_seed_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let runs: Vec<_> = ["a", "b"]
        .iter()
        .map(|name| {
            let out = dir.path().join(name);
            ok(&["run", "--instance", "random:k=3", "--policy", "lcb", "--T", "300", "--seed", "11", "--out", out.to_str().unwrap()]);
            fs::read(out.join("trace.csv")).unwrap()
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    let out = out.to_str().unwrap();
    let empty = ibandit(&["scan", "--instance", "prop2", "--horizons", "", "--out", out]);
    assert_eq!(empty.status.code(), Some(2));
    let unknown = ibandit(&["run", "--instance", "prop2", "--bogus", "--T", "5"]);
    assert_eq!(unknown.status.code(), Some(2));
    let policy = ibandit(&["run", "--instance", "prop2", "--policy", "nope", "--T", "5", "--out", out]);
    assert_eq!(policy.status.code(), Some(2));
    let rerun = ibandit(&["rerun", "--meta", "meta.json", "--seed", "3"]);
    assert_eq!(rerun.status.code(), Some(2));
}

#[test]
fn missing_column_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let ratings = dir.path().join("ratings.csv");
    fs::write(&ratings, "user,timestamp,rating\nu1,1,3.0\n").unwrap();
    let out = dir.path().join("fit");
    let res = ibandit(&["fit", "--ratings", ratings.to_str().unwrap(), "--k", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("arms"));
}

#[test]
fn missing_ratings_file_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fit");
    let res = ibandit(&["fit", "--ratings", dir.path().join("absent.csv").to_str().unwrap(), "--k", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn too_short_logs_are_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let synth = dir.path().join("synth");
    ok(&["synth", "--instance", "prop2", "--users", "2", "--events", "50", "--out", synth.to_str().unwrap()]);
    let out = dir.path().join("fit");
    let res = ibandit(&["fit", "--ratings", synth.join("ratings.csv").to_str().unwrap(), "--k", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("4096"));
}

#[test]
fn synthetic_fit_recovers_norm() {
    let dir = tempfile::tempdir().unwrap();
    let synth = dir.path().join("synth");
    ok(&["synth", "--instance", "random:k=3", "--users", "8", "--events", "400", "--noise", "none", "--seed", "2", "--out", synth.to_str().unwrap()]);
    let truth = Instance::read_json(synth.join("instance.json")).unwrap();
    let fit = dir.path().join("fit");
    ok(&["fit", "--ratings", synth.join("ratings.csv").to_str().unwrap(), "--k", "3", "--min-events", "100", "--out", fit.to_str().unwrap()]);
    let rows = csv_rows(&fit.join("fits.csv"));
    assert_eq!(rows.len(), 8);
    let want = truth.a.max_abs_norm();
    for row in rows {
        let norm: f64 = row[4].parse().unwrap();
        assert!((norm - want).abs() < 0.05 * want, "{norm} vs {want}");
    }
}

#[test]
fn indefinite_fit_reports_negative_eigenvalues() {
    let dir = tempfile::tempdir().unwrap();
    let a = InteractionMatrix::from_rows(&[vec![0.6, 0.9, 0.0], vec![0.9, 0.1, 0.2], vec![0.0, 0.2, -0.5]]).unwrap();
    let path = dir.path().join("planted.json");
    Instance::new(a, vec![0.5, 0.0, 1.0], NoiseModel::None).unwrap().write_json(&path).unwrap();
    let synth = dir.path().join("synth");
    ok(&["synth", "--instance", path.to_str().unwrap(), "--users", "4", "--events", "600", "--out", synth.to_str().unwrap()]);
    let fit = dir.path().join("fit");
    let ratings = synth.join("ratings.csv");
    ok(&["fit", "--ratings", ratings.to_str().unwrap(), "--k", "3", "--parametrization", "indefinite", "--min-events", "100", "--out", fit.to_str().unwrap()]);
    let rows = csv_rows(&fit.join("eigenvalues.csv"));
    let negatives = rows.iter().filter(|r| r[2].parse::<f64>().unwrap() < -0.1).count();
    // two negative eigenvalues per user
    assert_eq!(negatives, 8);
    let psd = dir.path().join("psd");
    ok(&["fit", "--ratings", ratings.to_str().unwrap(), "--k", "3", "--min-events", "100", "--out", psd.to_str().unwrap()]);
    assert!(csv_rows(&psd.join("eigenvalues.csv")).iter().all(|r| r[2].parse::<f64>().unwrap() > -1e-8));
}

#[test]
fn scan_separates_policies_on_counterexample() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("scan");
    ok(&["scan", "--instance", "prop2", "--seeds", "2", "--out", out.to_str().unwrap()]);
    let fits = csv_rows(&out.join("curve_fits.csv"));
    let slope = |name: &str| -> f64 { fits.iter().find(|r| r[0] == name).unwrap()[1].parse().unwrap() };
    assert!(slope("lcb") > slope("ilcb") + 0.3);
    assert!(out.join("slopes_lcb.csv").is_file());
    assert!(out.join("regret_curve.csv").is_file());
}

#[test]
fn qp_reports_linear_regret_optimum() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("qp");
    ok(&["qp", "--instance", "prop3", "--T", "1000", "--out", out.to_str().unwrap()]);
    let v = json(&out.join("qp.json"));
    let value = v["value"].as_f64().unwrap();
    assert!((value - 125_000.0).abs() <= 1e-9 * 125_000.0, "{v}");
}

#[test]
fn probe_writes_estimate_and_pull_count() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("probe");
    ok(&["probe", "--instance", "prop2", "--out", out.to_str().unwrap()]);
    let v = json(&out.join("probe.json"));
    assert_eq!(v["a_hat"], v["a_true"], "{v}");
    assert_eq!(v["pulls"].as_u64().unwrap(), 7);
}

#[test]
fn rerun_matches_original() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    ok(&["histogram", "--n-instances", "4", "--horizons", "128:512:x2", "--bins", "4", "--seed", "5", "--out", first.to_str().unwrap()]);
    let second = dir.path().join("second");
    ok(&["rerun", "--meta", first.join("meta.json").to_str().unwrap(), "--jobs", "1", "--out", second.to_str().unwrap()]);
    for name in ["meta.json", "slopes.csv", "histogram.csv", "summary.json"] {
        assert_eq!(fs::read(first.join(name)).unwrap(), fs::read(second.join(name)).unwrap(), "{name}");
    }
}
