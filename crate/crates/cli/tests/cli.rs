use std::path::Path;
use std::process::{Command, Output};

use attrib_core::eval::read_curve_csv;
use attrib_core::explainers::read_attributions;

const CONFIG: &str = r#"{
  "data": {"train_size": 120, "validation_size": 20, "test_size": 20},
  "arch": {"embed_dim": 3, "hidden": [8]},
  "classifier": {"epochs": 2},
  "distill": {"max_epochs": 3}
}"#;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_attrib"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn attrib")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn prepared() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("config.json"), CONFIG).unwrap();
    ok(dir.path(), &["gen-data", "--config", "config.json", "--out", "data.jsonl"]);
    ok(dir.path(), &["train-classifier", "--config", "config.json", "--dataset", "data.jsonl", "--out", "model.json"]);
    dir
}

#[test]
fn missing_dataset_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["train-classifier", "--dataset", "nowhere.jsonl", "--out", "m.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere.jsonl"));
}

#[test]
fn unknown_subcommand_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["frobnicate"]).status.code(), Some(2));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.json"), r#"{"sampels": 3}"#).unwrap();
    let out = run(dir.path(), &["gen-data", "--config", "bad.json", "--out", "d.jsonl"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn explain_records_pass_counts() {
    let dir = prepared();
    let d = dir.path();
    ok(d, &["explain", "--config", "config.json", "--dataset", "data.jsonl", "--model", "model.json", "--method", "ig", "--samples", "7", "--out", "ig.jsonl"]);
    let file = read_attributions(&d.join("ig.jsonl")).unwrap();
    assert_eq!(file.maps.len(), 20);
    assert!(file.maps.iter().all(|m| m.fwd_passes == 7 && m.bwd_passes == 7));

    ok(d, &["explain", "--config", "config.json", "--dataset", "data.jsonl", "--model", "model.json", "--method", "svs", "--samples", "3", "--accounting", "paper", "--limit", "5", "--out", "sv.jsonl"]);
    let file = read_attributions(&d.join("sv.jsonl")).unwrap();
    assert_eq!(file.maps.len(), 5);
    for m in &file.maps {
        let n = m.scores.len() as u64;
        assert!(m.total_passes() > 0 && m.total_passes() <= 3 * n);
        assert_eq!(m.bwd_passes, 0);
    }
}

#[test]
fn same_config_gives_identical_models() {
    let a = prepared();
    let b = prepared();
    let read = |d: &tempfile::TempDir| std::fs::read(d.path().join("model.json")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn seed_flag_changes_the_model() {
    let a = prepared();
    let d = a.path();
    ok(d, &["train-classifier", "--config", "config.json", "--dataset", "data.jsonl", "--seed", "5", "--out", "other.json"]);
    assert_ne!(std::fs::read(d.join("model.json")).unwrap(), std::fs::read(d.join("other.json")).unwrap());
}

#[test]
fn distill_stops_at_max_epochs() {
    let dir = prepared();
    let d = dir.path();
    ok(d, &["explain", "--config", "config.json", "--dataset", "data.jsonl", "--model", "model.json", "--method", "ig", "--samples", "4", "--split", "train", "--out", "t.jsonl"]);
    std::fs::write(d.join("one.json"), r#"{"distill": {"max_epochs": 1, "patience": 1}}"#).unwrap();
    ok(d, &["distill", "--config", "one.json", "--model", "model.json", "--targets", "t.jsonl", "--out", "s.json"]);
    let history = std::fs::read_to_string(d.join("s.json.history.csv")).unwrap();
    assert_eq!(history.lines().count(), 2, "{history}");
}

#[test]
fn distill_rejects_targets_from_another_classifier() {
    let dir = prepared();
    let d = dir.path();
    ok(d, &["explain", "--config", "config.json", "--dataset", "data.jsonl", "--model", "model.json", "--method", "ig", "--samples", "2", "--split", "train", "--out", "t.jsonl"]);
    ok(d, &["train-classifier", "--config", "config.json", "--dataset", "data.jsonl", "--seed", "9", "--out", "other.json"]);
    let out = run(d, &["distill", "--config", "config.json", "--model", "other.json", "--targets", "t.jsonl", "--out", "s.json"]);
    assert!(!out.status.success());
}

#[test]
fn empty_or_unordered_s_values_are_usage_errors() {
    let dir = prepared();
    let d = dir.path();
    for s_values in ["", "5,2", "20"] {
        let out = run(d, &["curve", "--config", "config.json", "--dataset", "data.jsonl", "--model", "model.json", "--method", "svs", "--s-reference", "20", "--s-values", s_values, "--out", "c.csv"]);
        assert_eq!(out.status.code(), Some(2), "s-values {s_values:?}");
    }
}

#[test]
fn linear_model_ig_curve_is_flat_zero() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("config.json"), CONFIG.replace("\"hidden\": [8]", "\"hidden\": []")).unwrap();
    ok(d, &["gen-data", "--config", "config.json", "--out", "data.jsonl"]);
    ok(d, &["train-classifier", "--config", "config.json", "--dataset", "data.jsonl", "--out", "model.json"]);
    ok(d, &["curve", "--config", "config.json", "--dataset", "data.jsonl", "--model", "model.json", "--method", "ig", "--s-reference", "50", "--s-values", "1,3,10", "--normalization", "raw", "--out", "c.csv"]);
    let points = read_curve_csv(&d.join("c.csv")).unwrap();
    assert_eq!(points.len(), 3);
    assert!(points.iter().all(|p| p.mean_mse < 1e-24), "{points:?}");
}

#[test]
fn objective_of_identical_maps() {
    let dir = prepared();
    let d = dir.path();
    ok(d, &["explain", "--config", "config.json", "--dataset", "data.jsonl", "--model", "model.json", "--method", "ig", "--samples", "3", "--out", "ig.jsonl"]);
    let printed = ok(d, &["objective", "--targets", "ig.jsonl", "--empirical", "ig.jsonl", "--alpha", "1"]);
    let value = printed.split_whitespace().nth(1).unwrap();
    assert_eq!(value.parse::<f64>().unwrap(), 0.0, "{printed}");
}

#[test]
fn render_writes_one_document_per_instance() {
    let dir = prepared();
    let d = dir.path();
    ok(d, &["explain", "--config", "config.json", "--dataset", "data.jsonl", "--model", "model.json", "--method", "ig", "--samples", "3", "--limit", "3", "--out", "ig.jsonl"]);
    ok(d, &["render", "--dataset", "data.jsonl", "--targets", "ig.jsonl", "--empirical", "ig.jsonl", "--out", "h.html"]);
    let html = std::fs::read_to_string(d.join("h.html")).unwrap();
    assert_eq!(html.lines().count(), 3);
    assert!(html.lines().all(|l| l.starts_with("<!DOCTYPE html>") && l.ends_with("</html>")));
}
