//! End-to-end tests of the `crlab` binary: exit codes, output formats,
//! reproducibility, and config-file handling.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn crlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crlab"))
        .args(args)
        .output()
        .expect("failed to launch crlab")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

const HEADER: &str =
    "scheme,epsilon,pf,throughput_norm,latency_mean,latency_p95,latency_p99,trials,truncation_rate";

#[test]
fn unknown_flag_exits_64() {
    let out = crlab(&["threshold-sweep", "--pf", "0.1", "--frobnicate"]);
    assert_eq!(out.status.code(), Some(64));
}

#[test]
fn unknown_subcommand_exits_64() {
    let out = crlab(&["latency-sweep"]);
    assert_eq!(out.status.code(), Some(64));
}

#[test]
fn missing_grid_exits_64() {
    let out = crlab(&["threshold-sweep", "--trials", "10"]);
    assert_eq!(out.status.code(), Some(64));
    assert!(String::from_utf8_lossy(&out.stderr).contains("grid"));
}

#[test]
fn epsilon_and_pf_conflict_exits_64() {
    let out = crlab(&["threshold-sweep", "--epsilon", "1.3", "--pf", "0.1"]);
    assert_eq!(out.status.code(), Some(64));
}

#[test]
fn target_on_threshold_sweep_exits_64() {
    let out = crlab(&["threshold-sweep", "--pf", "0.1", "--target", "0.9", "--trials", "10"]);
    assert_eq!(out.status.code(), Some(64));
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(crlab(&["--help"]).status.code(), Some(0));
    assert_eq!(crlab(&["--version"]).status.code(), Some(0));
    assert_eq!(crlab(&["threshold-sweep", "--help"]).status.code(), Some(0));
}

#[test]
fn csv_to_stdout_with_pinned_header() {
    let out = crlab(&[
        "threshold-sweep",
        "--pf",
        "0.1",
        "--schemes",
        "slotted,sliding",
        "--trials",
        "300",
        "--seed",
        "7",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), HEADER);
    // slotted analytic + slotted MC + sliding MC.
    assert_eq!(text.lines().count(), 1 + 3);
}

#[test]
fn csv_files_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let out = crlab(&[
            "threshold-sweep",
            "--pf",
            "0.05:0.15:0.05",
            "--trials",
            "500",
            "--seed",
            "11",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let bytes_a = fs::read(&a).unwrap();
    let bytes_b = fs::read(&b).unwrap();
    assert!(!bytes_a.is_empty());
    assert_eq!(bytes_a, bytes_b);
}

#[test]
fn json_output_carries_metadata_and_stable_rows() {
    let run = || {
        let out = crlab(&[
            "quantiles",
            "--pf",
            "0.1",
            "--schemes",
            "sliding",
            "--trials",
            "400",
            "--seed",
            "3",
            "--format",
            "json",
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        serde_json::from_str::<serde_json::Value>(&stdout(&out)).unwrap()
    };
    let first = run();
    let second = run();
    assert_eq!(first["rows"], second["rows"]);

    let meta = &first["metadata"];
    assert_eq!(meta["kind"], "quantile_sweep");
    assert!(meta["rng"].as_str().unwrap().contains("chacha8"));
    assert!(!meta["artifact_version"].as_str().unwrap().is_empty());
    assert_eq!(meta["seed"]["master_seed"], 3);
    let rows = first["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 1);
    assert!(rows[0]["latency_p95"].as_f64().unwrap() >= 1.0);
    assert!(rows[0]["latency_p99"].as_f64().unwrap() >= rows[0]["latency_p95"].as_f64().unwrap());
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sweep.json");
    fs::write(
        &config,
        r#"{
            "kind": "threshold_sweep",
            "scenario": {"snr_pu_db": 0.0, "inr_db": null, "n_s": 16, "n_frame": 128},
            "schemes": ["slotted_full_duplex"],
            "grid": [0.1],
            "grid_unit": "target_pf",
            "trials": 50,
            "seed": {"master_seed": 1, "trial_index": 0}
        }"#,
    )
    .unwrap();
    let out = crlab(&[
        "threshold-sweep",
        "--config",
        config.to_str().unwrap(),
        "--trials",
        "10",
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let value: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(value["metadata"]["trials"], 10, "flag must override the config");
    assert_eq!(value["metadata"]["seed"]["master_seed"], 1);
}

#[test]
fn bad_config_exits_64() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.json");
    fs::write(&config, "{not json").unwrap();
    let out = crlab(&["threshold-sweep", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(64));
    let missing = dir.path().join("missing.json");
    let out = crlab(&["threshold-sweep", "--config", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(64));
}

#[test]
fn unwritable_output_exits_2() {
    let out = crlab(&[
        "threshold-sweep",
        "--pf",
        "0.1",
        "--schemes",
        "slotted",
        "--trials",
        "10",
        "--out",
        "/nonexistent-dir/result.csv",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn inr_latency_sweep_shape() {
    let out = crlab(&[
        "inr-latency",
        "--inr-db",
        "0:4:2",
        "--trials",
        "300",
        "--seed",
        "5",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    // Three INR points x two full-duplex schemes.
    assert_eq!(text.lines().count(), 1 + 6);
    assert!(text.lines().skip(1).all(|l| {
        l.starts_with("slotted_full_duplex") || l.starts_with("sliding_full_duplex")
    }));
}

#[test]
fn inr_throughput_unreachable_target_exits_65() {
    // Slotted average latency can never reach 7 samples (floor is 8.5).
    let out = crlab(&[
        "inr-throughput",
        "--inr-db",
        "0",
        "--schemes",
        "slotted",
        "--target",
        "7",
        "--trials",
        "200",
    ]);
    assert_eq!(out.status.code(), Some(65), "{}", String::from_utf8_lossy(&out.stderr));
    // The CSV still emits (header only: unreachable rows are excluded).
    assert_eq!(stdout(&out).lines().count(), 1);
}

#[test]
fn inr_throughput_reaches_default_target() {
    let out = crlab(&[
        "inr-throughput",
        "--inr-db",
        "0",
        "--schemes",
        "sliding",
        "--trials",
        "400",
        "--seed",
        "9",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 2);
    let mean: f64 = text.lines().nth(1).unwrap().split(',').nth(4).unwrap().parse().unwrap();
    assert!((mean - 16.0).abs() <= 0.02 * 16.0 + 1e-9, "mean {mean}");
}

#[test]
fn scheme_alias_and_range_parsing() {
    let out = crlab(&[
        "threshold-sweep",
        "--epsilon",
        "1.2:1.4:0.1",
        "--schemes",
        "hd",
        "--trials",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    // Three thresholds, analytic-only HD rows.
    assert_eq!(text.lines().count(), 1 + 3);
    assert!(text.lines().skip(1).all(|l| l.starts_with("half_duplex") && l.contains(",0,")));
}

fn read_lines(path: &Path) -> usize {
    fs::read_to_string(path).unwrap().lines().count()
}

#[test]
fn perfect_suppression_inr_none() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    let out = crlab(&[
        "threshold-sweep",
        "--pf",
        "0.1",
        "--inr-db",
        "none",
        "--schemes",
        "sliding",
        "--trials",
        "200",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(read_lines(&path), 2);
}
