use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cltfp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cltfp")).args(args).output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn unknown_subcommand_is_usage_error() {
    let out = cltfp(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn missing_flag_is_usage_error() {
    assert_eq!(cltfp(&["gen-data", "--p", "3"]).status.code(), Some(2));
}

#[test]
fn train_with_missing_data_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nowhere.csv");
    let out = cltfp(&["train", "--data", s(&missing), "--checkpoint-out", s(&dir.path().join("m.json"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere.csv"));
}

#[test]
fn grad_check_passes_on_toy_config() {
    let out = cltfp(&["grad-check", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("max relative error"), "{text}");
}

#[test]
fn bad_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("flow.csv");
    assert!(cltfp(&["gen-data", "--p", "4", "--days", "15", "--steps-per-day", "12", "--out", s(&data)]).status.success());
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"train": {"epochz": 3}}"#).unwrap();
    let out = cltfp(&["train", "--data", s(&data), "--config", s(&cfg), "--checkpoint-out", s(&dir.path().join("m.json"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("epochz"));
}

#[test]
fn gen_data_rejects_bad_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let out = cltfp(&["gen-data", "--p", "1", "--days", "20", "--out", s(&dir.path().join("x.csv"))]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn plot_of_empty_prediction_file_fails() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("flow.csv");
    assert!(cltfp(&["gen-data", "--p", "3", "--days", "15", "--steps-per-day", "12", "--out", s(&data)]).status.success());
    let pred = dir.path().join("pred.csv");
    fs::write(&pred, "t,sensor_id,predicted,actual\n").unwrap();
    let out = cltfp(&["plot", "--pred-csv", s(&pred), "--actual-csv", s(&data), "--location", "0", "--out", s(&dir.path().join("p.svg"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty"));
}
