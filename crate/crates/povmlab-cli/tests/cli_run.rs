//! End-to-end runs of the `povmlab` binary against the shipped configs,
//! including exit-code conventions.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_povmlab"))
}

fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("povmlab-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn calibrated_discrete_config_passes_and_exports_json() {
    let out = temp_dir("calibrated");
    let status = bin()
        .args(["run", "--config"])
        .arg(config_path("calibrated_discrete.json"))
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let json = std::fs::read_to_string(out.join("results.json")).unwrap();
    assert!(json.contains("effect_projection_deviation"));
    let records = povmlab_cli::export::read_json(&json).unwrap();
    assert_eq!(records.len(), 1);
    assert!(records[0].metrics["effect_projection_deviation"] < 1e-8);
    assert!(records[0].metrics["repeatability_deficit"] < 1e-6);
    let _ = std::fs::remove_dir_all(&out);
}

#[test]
fn joint_sweep_runs_in_parallel_with_ordered_rows() {
    let out = temp_dir("sweep");
    let status = bin()
        .args(["sweep", "--config"])
        .arg(config_path("joint_budget_sweep.json"))
        .arg("--out")
        .arg(&out)
        .args(["--threads", "4", "--format", "csv"])
        .status()
        .unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(out.join("results.csv")).unwrap();
    // Header plus 100 rows.
    assert_eq!(csv.lines().filter(|l| !l.is_empty()).count(), 101);
    let _ = std::fs::remove_dir_all(&out);
}

#[test]
fn report_renders_stored_results() {
    let out = temp_dir("report");
    assert!(bin()
        .args(["run", "--config"])
        .arg(config_path("joint_saturation.json"))
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap()
        .success());
    let output = bin()
        .args(["report", "--input"])
        .arg(out.join("results.json"))
        .output()
        .unwrap();
    assert!(output.status.success());
    let text = String::from_utf8_lossy(&output.stdout);
    assert!(text.contains("kind=joint"));
    assert!(text.contains("product"));
    let _ = std::fs::remove_dir_all(&out);
}

#[test]
fn validation_errors_exit_with_code_2() {
    let out = temp_dir("badcfg");
    let bad = out.join("bad.json");
    std::fs::write(
        &bad,
        r#"{
        "kind": "unsharp-position",
        "object_grid": { "n_points": 63, "box_length": 24.0 },
        "probe_grid": { "n_points": 64, "box_length": 24.0 },
        "probe": { "state": "gaussian", "variance": 0.25 },
        "lambda": 1.0,
        "object_state": { "state": "gaussian", "variance": 1.0 },
        "n_cells": 8
    }"#,
    )
    .unwrap();
    let output = bin()
        .args(["run", "--config"])
        .arg(&bad)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("object_grid.n_points"), "{stderr}");
    let _ = std::fs::remove_dir_all(&out);
}

#[test]
fn physical_guard_errors_exit_with_code_3() {
    let out = temp_dir("guard");
    let cfg = out.join("guard.json");
    // Calibration gap condition violated: gap 0.3 < delta / lambda = 0.5.
    std::fs::write(
        &cfg,
        r#"{
        "kind": "discrete",
        "eigenvalues": [0.0, 0.3],
        "probe_grid": { "n_points": 256, "box_length": 40.0 },
        "lambda": 1.0,
        "delta": 0.5
    }"#,
    )
    .unwrap();
    let output = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(3));
    let _ = std::fs::remove_dir_all(&out);
}
