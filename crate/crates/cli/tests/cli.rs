use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sieve_lab::commands::{FitReport, ReproduceReport, ScrReport, TestReport, TuneReport};
use sieve_lab::io::csv_manifest;
use sieve_lab::manifest::Envelope;
use serde::de::DeserializeOwned;
use serde::Serialize;

fn sieve_lab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sieve-lab"))
        .current_dir(dir)
        .env_remove("SIEVE_LAB_THREADS")
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) {
    let out = sieve_lab(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn simulate(dir: &Path, n: usize) {
    ok(dir, &["simulate", "--model", "model2:0.5", "--n", &n.to_string(), "--seed", "7", "-o", "sim.csv"]);
}

/// Parses a JSON output and checks that writing it again gives the same text.
fn round_trip<T: Serialize + DeserializeOwned + PartialEq + std::fmt::Debug>(path: &Path) -> Envelope<T> {
    let text = fs::read_to_string(path).unwrap();
    let parsed: Envelope<T> = serde_json::from_str(&text).unwrap();
    let again = serde_json::to_string_pretty(&parsed).unwrap() + "\n";
    assert_eq!(again, text, "{} does not round-trip", path.display());
    let reparsed: Envelope<T> = serde_json::from_str(&again).unwrap();
    assert_eq!(reparsed, parsed);
    parsed
}

#[test]
fn simulate_writes_one_row_per_observation() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["simulate", "--model", "model1", "--error", "a", "--n", "500", "--seed", "7", "-o", "out.csv"]);
    let text = fs::read_to_string(dir.path().join("out.csv")).unwrap();
    let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data[0], "t,y");
    assert_eq!(data.len(), 501);
    assert!(data[500].starts_with("1,"));

    ok(dir.path(), &["simulate", "--model", "model2", "--model", "model3:0.3", "--panel", "--n", "50", "-o", "panel.csv"]);
    let text = fs::read_to_string(dir.path().join("panel.csv")).unwrap();
    assert!(text.lines().any(|l| l == "t,y,x1,x2"));
}

#[test]
fn under_determined_fit_exits_with_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path(), 10);
    let out = sieve_lab(dir.path(), &["fit", "-i", "sim.csv", "--c", "6", "--d", "10"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("under-determined"), "{err}");
}

#[test]
fn exit_codes_follow_the_error_kind() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("nan.csv"), "y\n1\nNaN\n3\n").unwrap();
    fs::write(d.join("blank.csv"), "y,x1\n1,2\n3,\n").unwrap();
    // a constant covariate leaves the space basis rank one
    let rows: String = (0..60).map(|i| format!("{},0.5\n", (i as f64 * 0.7).sin())).collect();
    fs::write(d.join("flat.csv"), format!("y,x1\n{rows}")).unwrap();

    let code = |args: &[&str]| sieve_lab(d, args).status.code();
    assert_eq!(code(&["fit", "-i", "nan.csv"]), Some(2));
    assert_eq!(code(&["fit", "-i", "blank.csv"]), Some(2));
    assert_eq!(code(&["fit", "-i", "flat.csv", "--scale", "1", "--c", "2", "--d", "3"]), Some(3));
    assert_eq!(code(&["fit", "-i", "missing.csv"]), Some(1));
    assert_eq!(code(&["fit", "--no-such-flag"]), Some(1));
    assert_eq!(code(&["simulate", "--model", "model9", "--n", "5"]), Some(1));
    assert_eq!(code(&["--help"]), Some(0));
}

#[test]
fn scr_is_reproducible_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    simulate(d, 400);
    let input_before = fs::read(d.join("sim.csv")).unwrap();
    let run = |threads: &str, out: &str| {
        ok(d, &[
            "--threads", threads, "scr", "-i", "sim.csv", "--c", "3", "--d", "4", "--B", "200", "--M", "200",
            "--grid-t", "15", "--grid-y", "12", "--seed", "11", "-o", out,
        ]);
    };
    run("1", "a.csv");
    fs::rename(d.join("a.csv"), d.join("one.csv")).unwrap();
    fs::rename(d.join("a.json"), d.join("one.json")).unwrap();
    run("4", "a.csv");
    assert_eq!(fs::read(d.join("one.csv")).unwrap(), fs::read(d.join("a.csv")).unwrap());
    assert_eq!(fs::read(d.join("one.json")).unwrap(), fs::read(d.join("a.json")).unwrap());
    // the input file is left alone
    assert_eq!(fs::read(d.join("sim.csv")).unwrap(), input_before);

    let csv = fs::read_to_string(d.join("a.csv")).unwrap();
    let header = csv.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "t,x,mhat,h,lo,hi");
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 1 + 15 * 12);
    let report: Envelope<ScrReport> = round_trip(&d.join("a.json"));
    assert_eq!((report.body.b_reps, report.body.m_reps, report.body.seed), (200, 200, 11));
    assert_eq!(report.body.c_alpha, report.body.region.c_alpha);
}

#[test]
fn outputs_regenerate_from_their_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    simulate(d, 300);
    ok(d, &["test", "separability", "-i", "sim.csv", "--c", "3", "--d", "4", "--B", "150", "--M", "150",
        "--grid-t", "10", "--grid-y", "10", "--seed", "5", "-o", "sep.json"]);
    let first = fs::read(d.join("sep.json")).unwrap();
    let env: Envelope<TestReport> = round_trip(&d.join("sep.json"));
    fs::remove_file(d.join("sep.json")).unwrap();
    let args: Vec<&str> = env.manifest.args.iter().map(String::as_str).collect();
    ok(d, &args);
    assert_eq!(fs::read(d.join("sep.json")).unwrap(), first);

    // the same holds for CSV outputs, whose manifest sits in a comment line
    let sim = fs::read_to_string(d.join("sim.csv")).unwrap();
    let manifest = csv_manifest(&sim).unwrap();
    fs::remove_file(d.join("sim.csv")).unwrap();
    let args: Vec<&str> = manifest.args.iter().map(String::as_str).collect();
    ok(d, &args);
    assert_eq!(fs::read_to_string(d.join("sim.csv")).unwrap(), sim);
}

#[test]
fn json_outputs_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    simulate(d, 300);
    ok(d, &["fit", "-i", "sim.csv", "--c", "3", "--d", "5", "-o", "fit.json"]);
    let fit: Envelope<FitReport> = round_trip(&d.join("fit.json"));
    assert_eq!((fit.body.p, fit.body.n, fit.body.r), (15, 300, 1));
    assert_eq!(fit.body.beta.len(), 15);
    assert_eq!(fit.manifest.command, "fit");

    ok(d, &["tune", "-i", "sim.csv", "--c-grid", "2,3", "--d-grid", "2,4", "-o", "tune.json"]);
    let tune: Envelope<TuneReport> = round_trip(&d.join("tune.json"));
    assert_eq!(tune.body.validation_mse_table.len(), 4);
    let min = tune.body.validation_mse_table.iter().map(|r| r.mse).fold(f64::INFINITY, f64::min);
    assert_eq!(tune.body.validation_mse, min);
    assert!(!tune.body.se_table.is_empty());
}

#[test]
fn exact_tests_accept_builtin_and_gridded_nulls() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    simulate(d, 300);
    // model 2 with δ = 0.5 on a fine grid
    let mut grid = String::from("t,x,value\n");
    for i in 0..=40 {
        for k in 0..=80 {
            let (t, x) = (i as f64 / 40.0, -10.0 + k as f64 / 4.0);
            let v = (0.5 * (2.0 * std::f64::consts::PI * t).sin() + 1.0) * (-0.5 * x * x).exp();
            grid.push_str(&format!("{t},{x},{v}\n"));
        }
    }
    fs::write(d.join("m0.csv"), grid).unwrap();
    let common = ["-i", "sim.csv", "--c", "3", "--d", "5", "--B", "200", "--m", "6", "--seed", "2"];
    let mut a = vec!["test", "exact", "--m0", "model2:0.5", "-o", "builtin.json"];
    a.extend(common);
    ok(d, &a);
    let mut b = vec!["test", "exact", "--m0", "grid:m0.csv", "-o", "grid.json"];
    b.extend(common);
    ok(d, &b);
    let x: Envelope<TestReport> = round_trip(&d.join("builtin.json"));
    let y: Envelope<TestReport> = round_trip(&d.join("grid.json"));
    let rel = (x.body.result.statistic - y.body.result.statistic).abs() / x.body.result.statistic;
    assert!(rel < 0.02, "{} vs {}", x.body.result.statistic, y.body.result.statistic);
    assert_eq!(x.body.m, 6);

    let out = sieve_lab(d, &["test", "exact", "-i", "sim.csv", "--c", "3", "--d", "5"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn thread_count_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = Command::new(env!("CARGO_BIN_EXE_sieve-lab"))
        .current_dir(d)
        .env("SIEVE_LAB_THREADS", "many")
        .args(["simulate", "--model", "model1", "--n", "5"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = Command::new(env!("CARGO_BIN_EXE_sieve-lab"))
        .current_dir(d)
        .env("SIEVE_LAB_THREADS", "2")
        .args(["simulate", "--model", "model1", "--n", "5"])
        .output()
        .unwrap();
    assert!(out.status.success());
}

#[test]
fn reproduce_reports_rates_with_standard_errors() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = sieve_lab(d, &["reproduce", "table2", "--reps", "50"]);
    assert_eq!(out.status.code(), Some(1));
    ok(d, &["reproduce", "table2", "--reps", "100", "--n", "200", "--B", "60", "--M", "60", "--grid", "8",
        "--c", "2", "--d", "3", "--tests", "exact", "-o", "t2.json"]);
    let report: Envelope<ReproduceReport> = round_trip(&d.join("t2.json"));
    let cell = &report.body.cells[0];
    assert_eq!(cell.label, "exact");
    assert_eq!(cell.reps + cell.failures, 100);
    let se = (cell.rate * (1.0 - cell.rate) / cell.reps as f64).sqrt();
    assert!((cell.mc_se - se).abs() < 1e-15);
}
