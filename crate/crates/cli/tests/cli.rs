//! End-to-end runs of the `boundcut` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use boundcut::data::{MixtureModel, ModelSpec};
use boundcut::io::write_points_csv;
use serde_json::Value;
use tempfile::TempDir;

const TWO_GAUSSIANS: &str = r#"{"classes": [
    {"prior": 0.5, "components": [{"mean": [-1.0], "std": 1.0}]},
    {"prior": 0.5, "components": [{"mean": [1.0], "std": 1.0}]}
]}"#;

fn boundcut(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_boundcut"))
        .current_dir(dir)
        .env_remove("BOUNDCUT_THREADS")
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn write(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

fn blobs(dir: &Path) {
    let model = MixtureModel::from_spec(&ModelSpec::gaussian_classes(&[
        (0.5, vec![-5.0, 0.0], 0.3),
        (0.5, vec![5.0, 0.0], 0.3),
    ]))
    .unwrap();
    let (data, labels) = model.sample(100, 11).unwrap();
    let mut buf = Vec::new();
    write_points_csv(&mut buf, &data, Some(&labels)).unwrap();
    fs::write(dir.join("blobs.csv"), buf).unwrap();
}

fn nn_gap_config(beta: Option<f64>) -> String {
    let bandwidth = beta.map_or(String::new(), |b| format!(r#""bandwidth": {{"beta": {b}}},"#));
    format!(
        r#"{{"experiment": "nn-gap", "model": {TWO_GAUSSIANS}, {bandwidth}
            "n_list": [60, 120], "seeds": [1, 2, 3], "n_eval": 2000,
            "output": {{"trace_csv": "trace.csv"}}}}"#
    )
}

#[test]
fn nn_gap_config_writes_one_record_per_cell() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "nn-gap.json", &nn_gap_config(None));
    let out = boundcut(
        dir.path(),
        &["converge", "--config", "nn-gap.json", "--out", "report.json"],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_slice(&fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    let records = report["records"].as_array().unwrap();
    assert_eq!(records.len(), 6);
    let mut cells: Vec<(u64, u64)> = records
        .iter()
        .map(|r| (r["n"].as_u64().unwrap(), r["seed"].as_u64().unwrap()))
        .collect();
    cells.dedup();
    assert_eq!(cells.len(), 6);
    assert_eq!(report["config_sha256"].as_str().unwrap().len(), 64);
    assert_eq!(report["seed"], 0);
    let trace = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert_eq!(trace.lines().next(), Some("n,h,seed,value,reference"));
    assert_eq!(trace.lines().count(), 7);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "nn-gap.json", &nn_gap_config(None));
    for (name, threads) in [("a.json", "1"), ("b.json", "3")] {
        let out = boundcut(
            dir.path(),
            &[
                "converge",
                "--config",
                "nn-gap.json",
                "--seed",
                "5",
                "--threads",
                threads,
                "--out",
                name,
            ],
        );
        assert_eq!(code(&out), 0);
    }
    assert_eq!(
        fs::read(dir.path().join("a.json")).unwrap(),
        fs::read(dir.path().join("b.json")).unwrap()
    );
}

#[test]
fn slow_bandwidth_decay_is_rejected_with_the_condition() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "nn-gap.json", &nn_gap_config(Some(0.125)));
    let out = boundcut(dir.path(), &["converge", "--config", "nn-gap.json"]);
    assert_eq!(code(&out), 2);
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("beta < 1/(4d + 4)"), "{msg}");
}

#[test]
fn invalid_configs_exit_2() {
    let dir = TempDir::new().unwrap();
    write(
        dir.path(),
        "bad.json",
        r#"{"experiment": "nn-gap", "n_list": [10], "bogus": true}"#,
    );
    assert_eq!(code(&boundcut(dir.path(), &["converge", "--config", "bad.json"])), 2);
    assert_eq!(
        code(&boundcut(dir.path(), &["converge", "--config", "missing.json"])),
        2
    );
    write(dir.path(), "boundary-cut.json", &nn_gap_config(None));
    let out = boundcut(
        dir.path(),
        &[
            "converge",
            "--experiment",
            "boundary-cut",
            "--config",
            "boundary-cut.json",
        ],
    );
    assert_eq!(code(&out), 2);
}

#[test]
fn two_blobs_are_recovered() {
    let dir = TempDir::new().unwrap();
    blobs(dir.path());
    let out = boundcut(dir.path(), &["cluster", "--input", "blobs.csv", "--out", "labels.csv"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let summary: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["ari"].as_f64(), Some(1.0));
    let labels = fs::read_to_string(dir.path().join("labels.csv")).unwrap();
    assert!(labels.starts_with("# config_sha256="));
    assert_eq!(labels.lines().filter(|l| !l.starts_with('#')).count(), 100);
}

#[test]
fn single_point_gets_label_one() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "one.csv", "0.5,1.5\n");
    let out = boundcut(dir.path(), &["cluster", "--input", "one.csv", "--out", "labels.csv"]);
    assert_eq!(code(&out), 0);
    let labels = fs::read_to_string(dir.path().join("labels.csv")).unwrap();
    let body: Vec<&str> = labels.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(body, ["1"]);
}

#[test]
fn alpha_conflicts_with_fixed_kernels() {
    let dir = TempDir::new().unwrap();
    blobs(dir.path());
    for kernel in ["v", "h", "gauss"] {
        let out = boundcut(
            dir.path(),
            &[
                "cluster",
                "--input",
                "blobs.csv",
                "--kernel",
                kernel,
                "--alpha",
                "0.3",
                "--out",
                "l.csv",
            ],
        );
        assert_eq!(code(&out), 2, "{kernel}");
    }
    let out = boundcut(
        dir.path(),
        &[
            "cluster",
            "--input",
            "blobs.csv",
            "--kernel",
            "g",
            "--alpha",
            "0.3",
            "--out",
            "l.csv",
        ],
    );
    assert_eq!(code(&out), 0);
}

#[test]
fn malformed_csv_exits_2() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "bad.csv", "1,2\n3\n");
    let out = boundcut(dir.path(), &["cluster", "--input", "bad.csv", "--out", "l.csv"]);
    assert_eq!(code(&out), 2);
    assert!(!out.stderr.is_empty());
}

#[test]
fn bounds_report_and_matrix() {
    let dir = TempDir::new().unwrap();
    blobs(dir.path());
    let out = boundcut(
        dir.path(),
        &[
            "bounds",
            "--input",
            "blobs.csv",
            "--kernel",
            "v",
            "--emit-matrix",
            "w.csv",
            "--out",
            "b.json",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_slice(&fs::read(dir.path().join("b.json")).unwrap()).unwrap();
    let entry = &report["bounds"][0];
    assert_eq!(entry["kernel"], "V");
    assert_eq!(entry["convention"], "unordered");
    assert!(entry["clamped_entries"].is_u64());
    let matrix = fs::read_to_string(dir.path().join("w.csv")).unwrap();
    assert_eq!(matrix.lines().count(), 100);
    assert_eq!(matrix.lines().next().unwrap().split(',').count(), 100);

    let out = boundcut(
        dir.path(),
        &["bounds", "--input", "blobs.csv", "--emit-matrix", "w.csv"],
    );
    assert_eq!(code(&out), 2);
}

#[test]
fn risk_reports_the_configured_classifier() {
    let dir = TempDir::new().unwrap();
    write(
        dir.path(),
        "risk.json",
        &format!(r#"{{"model": {TWO_GAUSSIANS}, "classifier": "bayes", "n": 10}}"#),
    );
    let out = boundcut(dir.path(), &["risk", "--config", "risk.json"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    let risk = report["risk"].as_f64().unwrap();
    assert!((risk - 0.158_655_253_931_457).abs() < 1e-6, "{risk}");
}

#[test]
fn thread_variable_must_be_positive() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "nn-gap.json", &nn_gap_config(None));
    let out = Command::new(env!("CARGO_BIN_EXE_boundcut"))
        .current_dir(dir.path())
        .env("BOUNDCUT_THREADS", "0")
        .args(["converge", "--config", "nn-gap.json"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
}
