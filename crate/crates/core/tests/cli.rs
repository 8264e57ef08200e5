//! End-to-end CLI tests: exit codes, report shapes, and the documented
//! examples, all through the real binary.

use rkhs_sparse::{generate, DgpConfig, Example, SelectionReport};
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rkhs-sparse"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn CLI")
}

fn write_csv(path: &Path, header: Option<&str>, rows: &[&str]) {
    let mut text = String::new();
    if let Some(h) = header {
        text.push_str(h);
        text.push('\n');
    }
    for r in rows {
        text.push_str(r);
        text.push('\n');
    }
    std::fs::write(path, text).unwrap();
}

fn example1_csv(path: &Path, n: usize, p: usize, seed: u64) {
    let d = generate(&DgpConfig {
        example: Example::Regression1,
        n,
        p,
        eta: 0.0,
        seed,
    })
    .unwrap();
    let mut text = String::new();
    for i in 0..n {
        for j in 0..p {
            text.push_str(&format!("{},", d.x[[i, j]]));
        }
        text.push_str(&format!("{}\n", d.y[i]));
    }
    std::fs::write(path, text).unwrap();
}

#[test]
fn kappa_hand_case_prints_value() {
    let out = run(&["kappa", "--a", "1,2", "--b", "1,3", "--p", "10"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "0.375");
}

#[test]
fn kappa_degenerate_and_identical() {
    let out = run(&["kappa", "--a", "", "--b", "", "--p", "10"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "0");

    let out = run(&["kappa", "--a", "1,2", "--b", "2,1", "--p", "10"]);
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "1");
}

#[test]
fn kappa_rejects_out_of_range_member() {
    let out = run(&["kappa", "--a", "11", "--b", "1", "--p", "10"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn select_recovers_example1_signal() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("ex1.csv");
    example1_csv(&csv, 200, 10, 0);
    let out = run(&[
        "select",
        "--input",
        csv.to_str().unwrap(),
        "--response",
        "11",
        "--loss",
        "square",
        "--seed",
        "0",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: SelectionReport = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report.schema_version, rkhs_sparse::SCHEMA_VERSION);
    assert_eq!(report.active_set.as_deref(), Some(&[1, 2, 3, 4, 5][..]));
    assert_eq!(report.n, 200);
    assert_eq!(report.p, 10);
    assert!(report.stability_curve.is_some());
    // active set consistent with scores under the strict rule
    let v = report.chosen_v.unwrap();
    let from_scores: Vec<usize> = report
        .scores
        .iter()
        .enumerate()
        .filter(|(_, s)| **s > v)
        .map(|(i, _)| i + 1)
        .collect();
    assert_eq!(report.active_set.as_deref(), Some(from_scores.as_slice()));
}

#[test]
fn fit_reports_scores_without_selection() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("d.csv");
    example1_csv(&csv, 50, 6, 3);
    let out_path = dir.path().join("report.json");
    let out = run(&[
        "fit",
        "--input",
        csv.to_str().unwrap(),
        "--response",
        "7",
        "--loss",
        "square",
        "--lambda",
        "0.01",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report: SelectionReport =
        serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(report.scores.len(), 6);
    assert!(report.active_set.is_none());
    assert!(report.stability_curve.is_none());
    assert_eq!(report.chosen_lambda, 0.01);
    let max_norm = report
        .scores_normalized
        .iter()
        .cloned()
        .fold(0.0f64, f64::max);
    assert!((max_norm - 1.0).abs() < 1e-15);
}

#[test]
fn tune_reports_grid_without_selection() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("d.csv");
    example1_csv(&csv, 60, 6, 4);
    let out = run(&[
        "tune",
        "--input",
        csv.to_str().unwrap(),
        "--response",
        "7",
        "--loss",
        "square",
        "--lambda-grid",
        "-3:-1:1",
        "--v-grid",
        "-2:1:0.5",
        "--splits",
        "6",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: SelectionReport = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report.active_set.is_none());
    assert!(report.scores.is_empty());
    let curve = report.stability_curve.unwrap();
    assert_eq!(curve.lambda_grid.len(), 3);
    assert_eq!(curve.v_grid.len(), 7);
    assert_eq!(curve.s_hat.len(), 3);
    assert!(report.chosen_v.is_some());
}

#[test]
fn simulate_emits_csv_row() {
    let out = run(&[
        "simulate",
        "--example",
        "regression1",
        "--n",
        "40",
        "--p",
        "6",
        "--loss",
        "square",
        "--reps",
        "1",
        "--lambda-grid",
        "-3:-1:1",
        "--v-grid",
        "-2:0:1",
        "--splits",
        "4",
        "--format",
        "csv",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8_lossy(&out.stdout);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "example,n,p,eta,loss,reps,size,tp,fp,c,u,o,failed"
    );
    let row = lines.next().unwrap();
    assert!(row.starts_with("regression1,40,6,0,square,1,"));
}

#[test]
fn hinge_on_real_valued_response_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("d.csv");
    example1_csv(&csv, 30, 5, 5);
    let out = run(&[
        "fit",
        "--input",
        csv.to_str().unwrap(),
        "--response",
        "6",
        "--loss",
        "hinge",
        "--lambda",
        "0.1",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("-1"));
}

#[test]
fn degenerate_bandwidth_is_numerical_error() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("d.csv");
    write_csv(&csv, None, &["1,2,0.5", "1,2,1.5", "1,2,0.7", "1,2,1.1"]);
    let out = run(&[
        "fit",
        "--input",
        csv.to_str().unwrap(),
        "--response",
        "3",
        "--loss",
        "square",
        "--lambda",
        "0.1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bandwidth"));
}

#[test]
fn missing_file_and_bad_cells_are_usage_errors() {
    let out = run(&[
        "fit",
        "--input",
        "/nonexistent/data.csv",
        "--response",
        "1",
        "--loss",
        "square",
        "--lambda",
        "0.1",
    ]);
    assert_eq!(out.status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bad.csv");
    write_csv(&csv, Some("a,b,y"), &["1,2,3", "1,NA,2", "0,1,4"]);
    let out = run(&[
        "fit",
        "--input",
        csv.to_str().unwrap(),
        "--response",
        "y",
        "--loss",
        "square",
        "--lambda",
        "0.1",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("row 3") && err.contains("column 2"), "{err}");
}

#[test]
fn unknown_flag_is_usage_error() {
    let out = run(&["select", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn tau_on_square_loss_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("d.csv");
    example1_csv(&csv, 20, 5, 6);
    let out = run(&[
        "fit",
        "--input",
        csv.to_str().unwrap(),
        "--response",
        "6",
        "--loss",
        "square",
        "--tau",
        "0.5",
        "--lambda",
        "0.1",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_exits_zero() {
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("select"));
}

#[test]
fn no_stable_selection_is_numerical_error() {
    // pure-noise response with thresholds far above any score: every kappa
    // is degenerate, so tuning reports no stable selection
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("noise.csv");
    example1_csv(&csv, 40, 5, 7);
    let out = run(&[
        "select",
        "--input",
        csv.to_str().unwrap(),
        "--response",
        "6",
        "--loss",
        "square",
        "--lambda-grid",
        "0:0:1",
        "--v-grid",
        "8:9:1",
        "--splits",
        "4",
    ]);
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stderr).contains("no stable selection"));
}
