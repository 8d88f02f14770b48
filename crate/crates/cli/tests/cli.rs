//! End-to-end checks of the `ks1d` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ks1d_cli::output::COLUMNS;

fn ks1d(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ks1d")).args(args).output().unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

fn rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

#[test]
fn steady_run_writes_constant_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "steady.json",
        r#"{"p":1,"n_cells":32,"t_end":0.5,"sample_interval":0.1,"ic":{"family":"constant","mass":1}}"#,
    );
    let out_dir = tmp.path().join("out");
    let o = ks1d(&["run", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out_dir.join("snapshots.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), COLUMNS.join(","));
    assert!(!csv.contains('\r'));
    let data = rows(&csv);
    assert_eq!(data.len(), 6);
    let col = |name: &str| COLUMNS.iter().position(|c| *c == name).unwrap();
    for r in &data {
        assert!((r[col("L")] + 0.5).abs() < 1e-10);
        assert!((r[col("mass")] - 1.0).abs() < 1e-14);
        assert!((r[col("prop41_gap")] - 1.0).abs() < 1e-12);
        assert_eq!(r[col("vacuum_flag")], 0.0);
    }
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["status"], "completed");
    assert_eq!(summary["t_final"], 0.5);
    assert!(summary["fitted_linear_envelopes"]["R_cumulative"].is_number());
    assert!(summary["residual_maxima"]["mass_drift"].as_f64().unwrap() < 1e-14);
}

#[test]
fn identical_configs_give_identical_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        r#"{"p":0.5,"n_cells":24,"t_end":0.05,"ic":{"family":"bump","mass":3}}"#,
    );
    let read = |name: &str| {
        let dir = tmp.path().join(name);
        assert_eq!(ks1d(&["run", "--config", &cfg, "--out", dir.to_str().unwrap()]).status.code(), Some(0));
        fs::read(dir.join("snapshots.csv")).unwrap()
    };
    let a = read("a");
    assert_eq!(a, read("b"));
    // p ≠ 1: critical-only columns are NaN
    let text = String::from_utf8(a).unwrap();
    let row = text.lines().nth(1).unwrap();
    assert_eq!(row.split(',').nth(10), Some("NaN"));
}

#[test]
fn cosine_run_completes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "cos.json",
        r#"{"p":1,"n_cells":32,"t_end":0.1,"ic":{"family":"cosine","mass":4,"amplitude":0.5}}"#,
    );
    let dir = tmp.path().join("o");
    let o = ks1d(&["run", "--config", &cfg, "--out", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("status=completed"));
}

#[test]
fn detected_blowup_is_success() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "surrogate.json",
        r#"{"p":1,"n_cells":32,"t_end":2,"sample_interval":0.1,
            "ic":{"family":"cosine","mass":1,"amplitude":0.5,"v0_mode":"constant_mass"},
            "forcing":"quadratic_growth"}"#,
    );
    let dir = tmp.path().join("o");
    let o = ks1d(&["run", "--config", &cfg, "--out", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["status"], "blowup_detected");
    assert!(summary["blowup_time_estimate"].as_f64().unwrap() < 1.0);
}

#[test]
fn step_failure_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    // a huge minimum step cannot be honoured, while sup u stays flat
    let cfg = write_config(
        tmp.path(),
        "fail.json",
        r#"{"p":1,"n_cells":64,"t_end":1,"ic":{"family":"constant","mass":1},
            "control":{"dt_min":0.01,"dt_max":0.1}}"#,
    );
    let dir = tmp.path().join("o");
    let o = ks1d(&["run", "--config", &cfg, "--out", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn config_errors_exit_two_and_name_the_key() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "bad.json",
        r#"{"p":-1,"n_cells":128,"t_end":1,"ic":{"family":"cosine","mass":4}}"#,
    );
    let o = ks1d(&["run", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`p`"));

    let cfg = write_config(tmp.path(), "empty.json", "{}");
    let o = ks1d(&["run", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing field"));
}

#[test]
fn io_errors_exit_three() {
    let o = ks1d(&["run", "--config", "/nonexistent/ks1d.json"]);
    assert_eq!(o.status.code(), Some(3));

    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        r#"{"p":1,"n_cells":16,"t_end":0.01,"ic":{"family":"constant","mass":1}}"#,
    );
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "").unwrap();
    let o = ks1d(&["run", "--config", &cfg, "--out", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn sweep_writes_matrix() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "base.json",
        r#"{"p":1,"n_cells":24,"t_end":0.05,"ic":{"family":"bump","mass":1}}"#,
    );
    let dir = tmp.path().join("sweep");
    let o = ks1d(&["sweep", "--config", &cfg, "--p", "0.5,1", "--mass", "1,10,25", "--out", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let matrix = fs::read_to_string(dir.join("sweep_matrix.csv")).unwrap();
    let lines: Vec<&str> = matrix.lines().collect();
    assert_eq!(lines[0], "p,M=1,M=10,M=25");
    assert_eq!(lines.len(), 3);
    assert!(lines[1..].iter().all(|l| l.matches("completed:").count() == 3));
    let long = fs::read_to_string(dir.join("sweep.csv")).unwrap();
    assert_eq!(long.lines().count(), 7);
    assert!(dir.join("cells/p0.5_M10/snapshots.csv").exists());
}

#[test]
fn sweep_records_invalid_cells() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "base.json",
        r#"{"p":1,"n_cells":16,"t_end":0.01,"ic":{"family":"bump","mass":1}}"#,
    );
    let dir = tmp.path().join("sweep");
    let o = ks1d(&["sweep", "--config", &cfg, "--p", "1", "--mass", "1,-2", "--out", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let matrix = fs::read_to_string(dir.join("sweep_matrix.csv")).unwrap();
    assert!(matrix.contains("invalid:NaN"));
}

#[test]
fn verify_constant_family() {
    let o = ks1d(&["verify", "--family", "constant", "--scenario", "none", "--levels", "16,32,64"]);
    assert_eq!(o.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["pass"], true);
    assert!(report["identity"].as_array().unwrap().iter().all(|e| e["report"]["exact"] == true));
}

#[test]
fn verify_full_family() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("report.json");
    let o = ks1d(&["verify", "--levels", "64,128,256", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(report["identity"].as_array().unwrap().len(), 12);
    assert_eq!(report["trajectory"].as_array().unwrap().len(), 3);
}

#[test]
fn verify_needs_three_levels() {
    let o = ks1d(&["verify", "--levels", "16"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("at least 3 levels"));
}
