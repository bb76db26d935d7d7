mod support;

use std::fs;

use memmeter_core::data::synthetic::{mixed_fixture, uniform_image};
use memmeter_core::data::Dataset;
use memmeter_core::metrics::spearman;
use memmeter_core::scores::{read_column_csv, ScoreTable};
use memmeter_core::seed;
use rand::Rng;
use support::*;

const QUICK: &str = r#"{
  "machine": {"kind": "linear"},
  "measure": {"n": 12, "m": 4, "epochs_a": 2, "epochs_b": 2, "accuracy_gate": 0.3},
  "predictor": {"epochs": 3, "batch_size": 8}
}"#;

fn quick_setup(dir: &std::path::Path) -> (String, String, String) {
    let data = mixed_fixture(30, 30, 3, 8, 9).unwrap();
    let manifest = write_ppm_dir(&data, &dir.join("data"));
    let config = write_config(&dir.join("quick.json"), QUICK);
    (config, s(&dir.join("data")).to_owned(), s(&manifest).to_owned())
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(memmeter(&["--help"]).status.code(), Some(0));
    assert_eq!(memmeter(&[]).status.code(), Some(2));
    assert_eq!(memmeter(&["measure", "--bogus"]).status.code(), Some(2));
    assert_eq!(memmeter(&["measure", "--workers", "many"]).status.code(), Some(2));
}

#[test]
fn config_and_data_errors_leave_no_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let bad = write_config(&dir.path().join("bad.json"), r#"{"measure": {"rounds": 3}}"#);
    let r = memmeter(&["measure", "--config", &bad, "--data", "x", "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(2));
    let r = memmeter(&["measure", "--data", s(&dir.path().join("missing")), "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&r.stderr).contains("does not exist"));
    let r = memmeter(&["measure", "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(2));
    assert!(!out.exists());

    let (config, data, manifest) = quick_setup(dir.path());
    // 60 images cannot hold three disjoint sets of 25.
    let r = memmeter(&[
        "measure", "--config", &config, "--data", &data, "--manifest", &manifest, "--out", s(&out),
        "--seed", "1",
    ]);
    assert_eq!(r.status.code(), Some(0));
    let big = write_config(&dir.path().join("big.json"), r#"{"machine": {"kind": "linear"}, "measure": {"n": 25, "m": 1}}"#);
    let r = memmeter(&["measure", "--config", &big, "--data", &data, "--out", s(&dir.path().join("o2"))]);
    assert_eq!(r.status.code(), Some(3), "{}", String::from_utf8_lossy(&r.stderr));
    assert!(entries(&dir.path().join("o2")).is_empty());
}

#[test]
fn failed_gate_everywhere_exits_4_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let (_, data, _) = quick_setup(dir.path());
    let config = write_config(
        &dir.path().join("fail.json"),
        r#"{"machine": {"kind": "linear"},
            "measure": {"n": 12, "m": 2, "epochs_a": 1, "epochs_b": 1, "lr_a": 1e-12, "accuracy_gate": 1.0}}"#,
    );
    let out = dir.path().join("out");
    let r = memmeter(&["measure", "--config", &config, "--data", &data, "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(4), "{}", String::from_utf8_lossy(&r.stderr));
    assert!(entries(&out).is_empty());
}

#[test]
fn measure_writes_scores_log_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let (config, data, manifest) = quick_setup(dir.path());
    let out = dir.path().join("out");
    let r = memmeter(&[
        "measure", "--config", &config, "--data", &data, "--manifest", &manifest, "--out", s(&out), "--workers", "2",
    ]);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    assert_eq!(entries(&out), ["episodes.jsonl", "run_manifest.json", "scores.csv"]);
    let table = ScoreTable::read_csv(fs::File::open(out.join("scores.csv")).unwrap()).unwrap();
    assert_eq!(table.len(), 12);
    let log = fs::read_to_string(out.join("episodes.jsonl")).unwrap();
    assert_eq!(log.lines().count(), 4);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("run_manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "measure");
    assert_eq!(manifest["config_hash"].as_str(), Some(table.config_hash.as_str()));
    assert_eq!(manifest["episode_config"]["n"], 12);
}

#[test]
fn attributes_of_a_single_image() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = seed::rng(1);
    let one = Dataset::unlabeled(vec![uniform_image("only", 3, 5, 7, &mut rng)], "t").unwrap();
    write_ppm_dir(&one, &dir.path().join("d"));
    let out = dir.path().join("out");
    let r = memmeter(&["attributes", "--data", s(&dir.path().join("d")), "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    let text = fs::read_to_string(out.join("attributes.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "image_id,hue,saturation,value,contrast,colorfulness,entropy");
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("only,"));
}

#[test]
fn analyze_merged_column_matches_direct_spearman() {
    let dir = tempfile::tempdir().unwrap();
    let (config, data, manifest) = quick_setup(dir.path());
    let out = dir.path().join("out");
    let base = ["--config", &config, "--data", &data, "--manifest", &manifest, "--out", s(&out)];
    let r = memmeter(&[&["measure"], &base[..]].concat());
    assert_eq!(r.status.code(), Some(0));
    let scores = read_column_csv(fs::File::open(out.join("scores.csv")).unwrap(), "score").unwrap();

    let mut rng = seed::rng(2);
    let mut merge = String::from("image_id,human\n");
    let mut human = Vec::new();
    for id in scores.keys() {
        let v: f64 = rng.gen();
        human.push(v);
        merge.push_str(&format!("{id},{v}\n"));
    }
    merge.push_str("not_scored,0.5\n");
    let merge_path = dir.path().join("human.csv");
    fs::write(&merge_path, merge).unwrap();

    let r = memmeter(&[&["analyze", "--scores", s(&out.join("scores.csv")), "--merge-csv", s(&merge_path)], &base[..]].concat());
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    for f in ["groups.csv", "groups.json", "correlations.csv", "correlations.json", "labels.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("correlations.json")).unwrap()).unwrap();
    let row = report["correlations"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["column"] == "human")
        .unwrap();
    let direct = spearman(&scores.values().copied().collect::<Vec<_>>(), &human).unwrap();
    assert_eq!(row["rho"].as_f64(), direct);
    assert_eq!(row["n"], 12);
    let labels: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("labels.json")).unwrap()).unwrap();
    assert_eq!(labels["labels"].as_array().unwrap().len(), 1);

    let r = memmeter(&["analyze", "--scores", s(&out.join("scores.csv")), "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn predictor_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let (config, data, manifest) = quick_setup(dir.path());
    let out = dir.path().join("out");
    let base = ["--config", &config, "--data", &data, "--manifest", &manifest, "--out", s(&out)];

    let r = memmeter(&[&["predict"], &base[..]].concat());
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("train-predictor"));
    assert!(entries(&out).is_empty());

    assert_eq!(memmeter(&[&["measure"], &base[..]].concat()).status.code(), Some(0));
    let scores = s(&out.join("scores.csv")).to_owned();
    let r = memmeter(&[&["train-predictor", "--scores", &scores], &base[..]].concat());
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    for f in ["predictor.mmt", "predictor.json", "history.csv", "split.json", "evaluation.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let history = fs::read_to_string(out.join("history.csv")).unwrap();
    assert_eq!(history.lines().count(), 4);

    let r = memmeter(&[&["predict"], &base[..]].concat());
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    let preds = read_column_csv(fs::File::open(out.join("predictions.csv")).unwrap(), "predicted_score").unwrap();
    assert_eq!(preds.len(), 60);
    assert!(preds.values().all(|p| *p > 0.0 && *p < 1.0));
    let first = fs::read(out.join("predictions.csv")).unwrap();
    memmeter(&[&["predict"], &base[..]].concat());
    assert_eq!(first, fs::read(out.join("predictions.csv")).unwrap());
}

#[test]
fn sweep_needs_two_values() {
    let dir = tempfile::tempdir().unwrap();
    let (_, data, _) = quick_setup(dir.path());
    let config = write_config(
        &dir.path().join("sweep.json"),
        r#"{"machine": {"kind": "linear"}, "sweep": {"knob": "seed", "values": [3]}}"#,
    );
    let out = dir.path().join("out");
    let r = memmeter(&["sweep", "--config", &config, "--data", &data, "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(2));
    assert!(!out.exists());
}
