use std::fs;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_spike-spectra"))
}

#[test]
fn tw_subcommand_prints_quantile_and_cdf() {
    let out = bin().args(["tw", "--quantile", "0.99"]).output().unwrap();
    assert!(out.status.success());
    let q: f64 = String::from_utf8(out.stdout).unwrap().trim().parse().unwrap();
    assert!((q - 2.02).abs() < 0.01);
    let out = bin().args(["tw", "--cdf", "-1.2"]).output().unwrap();
    let f: f64 = String::from_utf8(out.stdout).unwrap().trim().parse().unwrap();
    assert!(f > 0.4 && f < 0.6);
    let out = bin().args(["tw", "--quantile", "1.5"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_writes_json_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("exp.json");
    fs::write(
        &config,
        r#"{"scenario": "factor_tables", "reps": 10, "master_seed": 1,
            "cells": [{"n": 100, "factor": {"p": 100, "r": 1.0}}]}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("results");
    let status = bin()
        .args(["run", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out_dir)
        .args(["--workers", "2"])
        .status()
        .unwrap();
    assert!(status.success());
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(out_dir.join("exp.json")).unwrap()).unwrap();
    assert_eq!(json["cells"][0]["k"], 11);
    let csv = fs::read_to_string(out_dir.join("exp.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"scenario": "tw_edge", "cells": [{"n": 10}]}"#).unwrap();
    let status = bin()
        .args(["run", "--config"])
        .arg(&bad)
        .arg("--out")
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    let status = bin()
        .args(["run", "--preset", "nope", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    let failing = dir.path().join("fail.json");
    fs::write(
        &failing,
        r#"{"scenario": "factor_tables", "reps": 5,
            "cells": [{"n": 20, "model": {"kind": "spiked", "spikes": [], "bulk": {"value": 1.0, "count": 6}}}]}"#,
    )
    .unwrap();
    let status = bin()
        .args(["run", "--config"])
        .arg(&failing)
        .arg("--out")
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));
}

#[test]
fn estimate_k_reads_observations() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("data.csv");
    // 60 samples of 20 variables: one strong direction plus small noise.
    let mut text = String::new();
    for t in 0..60 {
        let f = ((t * 37 % 11) as f64 - 5.0) * 3.0;
        let row: Vec<String> = (0..20)
            .map(|j| format!("{:.6}", f + (((t * 7 + j * 13) % 17) as f64 - 8.0) * 0.05))
            .collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    fs::write(&input, text).unwrap();
    let out_path = dir.path().join("k.json");
    let status = bin()
        .args(["estimate-k", "--input"])
        .arg(&input)
        .args(["--multiplier", "1", "--quantile", "0.99", "--out"])
        .arg(&out_path)
        .status()
        .unwrap();
    assert!(status.success());
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out_path).unwrap()).unwrap();
    assert!(json["k_hat"].as_u64().unwrap() >= 1);
    assert!(json["sigma_hat"].as_f64().unwrap() > 0.0);

    fs::write(&input, "a,b\n1,x\n").unwrap();
    let status = bin().args(["estimate-k", "--input"]).arg(&input).status().unwrap();
    assert_eq!(status.code(), Some(3));
}

#[test]
fn eigcheck_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");
    fs::write(
        &model,
        r#"{"kind": "spiked", "spikes": [400, 100], "bulk": {"value": 1.0, "count": 48}}"#,
    )
    .unwrap();
    let out_path = dir.path().join("report.json");
    let status = bin()
        .args(["eigcheck", "--model"])
        .arg(&model)
        .args([
            "--seed",
            "4",
            "--n",
            "80",
            "--reps",
            "10",
            "--dist",
            "uniform_sym",
            "--out",
        ])
        .arg(&out_path)
        .status()
        .unwrap();
    assert!(status.success());
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(json["k"], 2);
    assert!(json["spikes"][0]["mean_alignment"].as_f64().unwrap() > 0.95);
    assert!(json["max_completeness_error"].as_f64().unwrap() < 1e-8);
    let status = bin()
        .args(["eigcheck", "--model"])
        .arg(&model)
        .args(["--n", "80", "--dist", "cauchy"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}
