//! End-to-end checks of the command-line surface: artifact contracts,
//! exit codes, determinism, and input immutability.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn pandora() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pandora"))
}

fn run_ok(args: &[&str]) -> Output {
    let out = pandora().args(args).output().expect("spawn pandora");
    assert!(
        out.status.success(),
        "command {:?} failed\nstdout: {}\nstderr: {}",
        args,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn synth_into(dir: &Path, n: usize, seed: u64) -> (PathBuf, PathBuf) {
    let out = dir.join("data");
    run_ok(&[
        "synth",
        "--n",
        &n.to_string(),
        "--communities",
        "4",
        "--edge-prob-in",
        "0.2",
        "--edge-prob-out",
        "0.03",
        "--seed",
        &seed.to_string(),
        "--out-dir",
        out.to_str().unwrap(),
        "--quiet",
    ]);
    (out.join("nodes.csv"), out.join("edges.csv"))
}

#[test]
fn synth_writes_dataset_and_meta() {
    let dir = TempDir::new().unwrap();
    let (nodes, edges) = synth_into(dir.path(), 40, 1);
    assert!(nodes.exists() && edges.exists());
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("data/run_meta.json")).unwrap())
            .unwrap();
    assert_eq!(meta["command"], "synth");
    assert_eq!(meta["seed"], 1);
    assert!(meta["timings"]["wall_seconds"].is_number());
}

#[test]
fn synth_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let (nodes_a, _) = synth_into(&dir.path().join("a"), 50, 7);
    let (nodes_b, _) = synth_into(&dir.path().join("b"), 50, 7);
    assert_eq!(
        std::fs::read(nodes_a).unwrap(),
        std::fs::read(nodes_b).unwrap()
    );
}

#[test]
fn motifs_writes_nmd_csv() {
    let dir = TempDir::new().unwrap();
    let (nodes, edges) = synth_into(dir.path(), 30, 2);
    let out = dir.path().join("m");
    run_ok(&[
        "motifs",
        "--nodes",
        nodes.to_str().unwrap(),
        "--edges",
        edges.to_str().unwrap(),
        "--out-dir",
        out.to_str().unwrap(),
        "--quiet",
    ]);
    let text = std::fs::read_to_string(out.join("nmd.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "node_id,mt31,mt32,mt41,mt42,mt43");
    assert_eq!(text.lines().count(), 31, "one row per node plus header");
}

#[test]
fn motifs_significance_report() {
    let dir = TempDir::new().unwrap();
    let (nodes, edges) = synth_into(dir.path(), 24, 3);
    let out = dir.path().join("m");
    run_ok(&[
        "motifs",
        "--nodes",
        nodes.to_str().unwrap(),
        "--edges",
        edges.to_str().unwrap(),
        "--ensemble",
        "4",
        "--seed",
        "5",
        "--out-dir",
        out.to_str().unwrap(),
        "--quiet",
    ]);
    let reports: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("significance.json")).unwrap())
            .unwrap();
    assert_eq!(reports.as_array().unwrap().len(), 5);
}

#[test]
fn featurize_outputs() {
    let dir = TempDir::new().unwrap();
    let (nodes, edges) = synth_into(dir.path(), 40, 4);
    let out = dir.path().join("f");
    run_ok(&[
        "featurize",
        "--nodes",
        nodes.to_str().unwrap(),
        "--edges",
        edges.to_str().unwrap(),
        "--out-dir",
        out.to_str().unwrap(),
        "--quiet",
    ]);
    for name in ["schemes.json", "aft.csv", "sft.csv", "nmd.csv", "run_meta.json"] {
        assert!(out.join(name).exists(), "{name} missing");
    }
    let sft = std::fs::read_to_string(out.join("sft.csv")).unwrap();
    assert!(sft.starts_with("node_id,degree,flight_degree,transport_freq,mt31"));
}

fn train_args<'a>(
    nodes: &'a str,
    edges: &'a str,
    out: &'a str,
    extra: &[&'a str],
) -> Vec<&'a str> {
    let mut args = vec![
        "train",
        "--nodes",
        nodes,
        "--edges",
        edges,
        "--max-epoch",
        "25",
        "--patience",
        "25",
        "--hidden",
        "8",
        "--seed",
        "3",
        "--out-dir",
        out,
        "--quiet",
    ];
    args.extend_from_slice(extra);
    args
}

#[test]
fn train_writes_artifacts_and_is_idempotent() {
    let dir = TempDir::new().unwrap();
    let (nodes, edges) = synth_into(dir.path(), 60, 5);
    let nodes_bytes = std::fs::read(&nodes).unwrap();
    let out = dir.path().join("run");
    let args = train_args(
        nodes.to_str().unwrap(),
        edges.to_str().unwrap(),
        out.to_str().unwrap(),
        &[],
    );
    run_ok(&args);
    let expected = [
        "history.csv",
        "metrics.json",
        "embeddings.csv",
        "predictions.csv",
        "checkpoint.json",
        "schemes.json",
        "split.json",
        "run_meta.json",
    ];
    for name in expected {
        assert!(out.join(name).exists(), "{name} missing");
    }
    let first: Vec<Vec<u8>> = expected[..7]
        .iter()
        .map(|n| std::fs::read(out.join(n)).unwrap())
        .collect();

    // rerun: byte-identical artifacts except run_meta wall-clock fields
    run_ok(&args);
    for (name, before) in expected[..7].iter().zip(&first) {
        let after = std::fs::read(out.join(name)).unwrap();
        assert_eq!(&after, before, "{name} changed across identical reruns");
    }
    // inputs untouched
    assert_eq!(std::fs::read(&nodes).unwrap(), nodes_bytes);

    let history = std::fs::read_to_string(out.join("history.csv")).unwrap();
    assert!(history.starts_with("epoch,train_loss,val_loss,train_acc,val_acc"));
    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("metrics.json")).unwrap()).unwrap();
    assert!(metrics["accuracy"].as_f64().unwrap() >= 0.0);
    // wall-clock lives in run_meta.json only
    assert_eq!(metrics["astt_seconds"].as_f64().unwrap(), 0.0);
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("run_meta.json")).unwrap()).unwrap();
    assert!(meta["timings"]["astt_seconds"].as_f64().unwrap() > 0.0);
}

#[test]
fn evaluate_and_predict_from_checkpoint() {
    let dir = TempDir::new().unwrap();
    let (nodes, edges) = synth_into(dir.path(), 60, 6);
    let out = dir.path().join("run");
    run_ok(&train_args(
        nodes.to_str().unwrap(),
        edges.to_str().unwrap(),
        out.to_str().unwrap(),
        &[],
    ));

    let eval_dir = dir.path().join("eval");
    run_ok(&[
        "evaluate",
        "--checkpoint",
        out.join("checkpoint.json").to_str().unwrap(),
        "--nodes",
        nodes.to_str().unwrap(),
        "--edges",
        edges.to_str().unwrap(),
        "--seed",
        "3",
        "--out-dir",
        eval_dir.to_str().unwrap(),
        "--quiet",
    ]);
    let eval_metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(eval_dir.join("metrics.json")).unwrap())
            .unwrap();
    let train_metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("metrics.json")).unwrap()).unwrap();
    // same checkpoint, same split seed: test accuracy must agree
    assert_eq!(eval_metrics["accuracy"], train_metrics["accuracy"]);

    let pred_dir = dir.path().join("pred");
    run_ok(&[
        "predict",
        "--checkpoint",
        out.join("checkpoint.json").to_str().unwrap(),
        "--nodes",
        nodes.to_str().unwrap(),
        "--edges",
        edges.to_str().unwrap(),
        "--out-dir",
        pred_dir.to_str().unwrap(),
        "--quiet",
    ]);
    let predictions = std::fs::read_to_string(pred_dir.join("predictions.csv")).unwrap();
    assert!(predictions.starts_with("node_id,label,p_risk_free,p_low,p_medium,p_high"));
    assert_eq!(predictions.lines().count(), 61);
    // predictions match the training run's own table
    assert_eq!(
        predictions,
        std::fs::read_to_string(out.join("predictions.csv")).unwrap()
    );
}

#[test]
fn train_respects_config_file_with_flag_override() {
    let dir = TempDir::new().unwrap();
    let (nodes, edges) = synth_into(dir.path(), 40, 8);
    let config_path = dir.path().join("cfg.json");
    std::fs::write(
        &config_path,
        serde_json::json!({
            "nodes": nodes.to_str().unwrap(),
            "edges": edges.to_str().unwrap(),
            "aggregator": "su",
            "alpha": 0.02,
            "max_epoch": 40,
            "patience": 40,
            "hidden": 8,
            "seed": 1,
            "out_dir": dir.path().join("run").to_str().unwrap(),
        })
        .to_string(),
    )
    .unwrap();
    run_ok(&[
        "train",
        "--config",
        config_path.to_str().unwrap(),
        "--max-epoch",
        "12",
        "--quiet",
    ]);
    let meta: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("run/run_meta.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(meta["config"]["aggregator"], "su");
    assert_eq!(meta["config"]["max_epoch"], 12, "flag overrides file");
    let history = std::fs::read_to_string(dir.path().join("run/history.csv")).unwrap();
    assert_eq!(history.lines().count(), 13, "12 epochs plus header");
}

#[test]
fn grid_runner_writes_per_run_dirs_and_summary() {
    let dir = TempDir::new().unwrap();
    let (nodes, edges) = synth_into(dir.path(), 40, 9);
    let grid_path = dir.path().join("grid.json");
    std::fs::write(
        &grid_path,
        serde_json::json!([
            {"aggregator": "ha"},
            {"aggregator": "gcn"},
        ])
        .to_string(),
    )
    .unwrap();
    let out = dir.path().join("grid_out");
    let mut args = train_args(
        nodes.to_str().unwrap(),
        edges.to_str().unwrap(),
        out.to_str().unwrap(),
        &[],
    );
    args.push("--grid");
    let grid_str = grid_path.to_str().unwrap().to_string();
    let args: Vec<String> = args
        .into_iter()
        .map(str::to_string)
        .chain([grid_str])
        .collect();
    let out_cmd = pandora().args(&args).output().unwrap();
    assert!(out_cmd.status.success(), "{}", String::from_utf8_lossy(&out_cmd.stderr));
    assert!(out.join("run_000/checkpoint.json").exists());
    assert!(out.join("run_001/checkpoint.json").exists());
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("grid_summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary.as_array().unwrap().len(), 2);
}

#[test]
fn gradcheck_exits_zero_and_prints_error() {
    let dir = TempDir::new().unwrap();
    let out = pandora()
        .args([
            "gradcheck",
            "--seed",
            "7",
            "--out-dir",
            dir.path().join("g").to_str().unwrap(),
            "--quiet",
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(
        stdout.contains("gradcheck max_rel_error="),
        "missing result line: {stdout}"
    );
}

#[test]
fn validation_error_is_single_line_exit_one() {
    let out = pandora()
        .args(["motifs", "--nodes", "/nonexistent/nodes.csv", "--edges", "/nonexistent/edges.csv"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    let error_lines: Vec<&str> = stderr.lines().filter(|l| l.starts_with("error: ")).collect();
    assert_eq!(error_lines.len(), 1, "expected one machine-parsable line, got: {stderr}");
}

#[test]
fn invalid_alpha_rejected() {
    let dir = TempDir::new().unwrap();
    let (nodes, edges) = synth_into(dir.path(), 30, 10);
    let out = pandora()
        .args([
            "train",
            "--nodes",
            nodes.to_str().unwrap(),
            "--edges",
            edges.to_str().unwrap(),
            "--alpha",
            "0",
            "--quiet",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("alpha"));
}

#[test]
fn unknown_flag_exits_two_with_usage() {
    let out = pandora().args(["train", "--no-such-flag"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("Usage") || stderr.contains("usage"), "{stderr}");
}

#[test]
fn dynamic_training_on_timestamped_data() {
    let dir = TempDir::new().unwrap();
    let data = dir.path().join("data");
    run_ok(&[
        "synth",
        "--n",
        "48",
        "--communities",
        "4",
        "--edge-prob-in",
        "0.25",
        "--edge-prob-out",
        "0.04",
        "--timestamps",
        "3",
        "--seed",
        "11",
        "--out-dir",
        data.to_str().unwrap(),
        "--quiet",
    ]);
    assert!(data.join("ts/t_2020-03-01.csv").exists());
    let out = dir.path().join("run");
    let nodes = data.join("nodes.csv");
    let edges = data.join("edges.csv");
    let ts = data.join("ts");
    let mut args: Vec<String> = train_args(
        nodes.to_str().unwrap(),
        edges.to_str().unwrap(),
        out.to_str().unwrap(),
        &["--dynamic"],
    )
    .into_iter()
    .map(str::to_string)
    .collect();
    args.push("--timeseries".to_string());
    args.push(ts.to_str().unwrap().to_string());
    let result = pandora().args(&args).output().unwrap();
    assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
    assert!(out.join("checkpoint.json").exists());
}
