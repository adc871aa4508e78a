use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn wepkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wepkit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn machine(args: &[&str]) -> Value {
    let mut full = args.to_vec();
    full.extend(["--format", "machine"]);
    let out = wepkit(&full);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("machine output is JSON")
}

fn path(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

#[test]
fn score_fixture_selects_calibrated_on_validation() {
    let dataset = path(&fixtures().join("harness/dataset"));
    let scores = path(&fixtures().join("harness/scores.jsonl"));
    let v = machine(&[
        "score",
        "--dataset",
        &dataset,
        "--scores",
        &scores,
        "--labels-from-dataset",
    ]);
    assert_eq!(v["method"], "calibrated");
    assert_eq!(v["groups"][0]["accuracy"]["correct"], 4);
    assert_eq!(v["groups"][0]["accuracy"]["total"], 5);
    assert_eq!(v["mean"], 80.0);
    assert_eq!(v["spread_kind"], "binomial-stderr");

    let raw = machine(&[
        "score",
        "--dataset",
        &dataset,
        "--scores",
        &scores,
        "--method",
        "raw",
    ]);
    assert_eq!(raw["mean"], 20.0);
}

#[test]
fn score_groups_report_spread_across_files() {
    let dataset = path(&fixtures().join("harness/dataset"));
    let scores = path(&fixtures().join("harness/scores.jsonl"));
    let v = machine(&[
        "score",
        "--dataset",
        &dataset,
        "--scores",
        &scores,
        &scores,
        "--method",
        "raw",
    ]);
    assert_eq!(v["groups"].as_array().unwrap().len(), 2);
    assert_eq!(v["spread"], 0.0);
    assert_eq!(v["spread_kind"], "std-across-groups");
}

#[test]
fn score_rejects_unknown_examples() {
    let tmp = tempfile::tempdir().unwrap();
    let bogus = tmp.path().join("scores.jsonl");
    std::fs::write(
        &bogus,
        r#"{"example_id":"nope","candidate_index":0,"full_logprob":-1.0,"full_token_count":2,"hyp_logprob":-1.0,"hyp_token_count":1,"model_id":"m"}
"#,
    )
    .unwrap();
    let dataset = path(&fixtures().join("harness/dataset"));
    let out = wepkit(&["score", "--dataset", &dataset, "--scores", &path(&bogus)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope"));
}

#[test]
fn generate_writes_fixed_field_order_and_reports_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = path(&tmp.path().join("d"));
    let out = wepkit(&[
        "generate", "--hops", "2", "--n", "20", "--seed", "11", "--out", &out_dir,
    ]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed: 11"));
    let line = std::fs::read_to_string(tmp.path().join("d/train.jsonl")).unwrap();
    let first = line.lines().next().unwrap();
    let keys = [
        "\"id\"",
        "\"variant\"",
        "\"premise\"",
        "\"event_text\"",
        "\"p_true\"",
        "\"valid_wep\"",
        "\"invalid_wep\"",
        "\"candidates\"",
        "\"label\"",
        "\"provenance\"",
    ];
    let positions: Vec<usize> = keys.iter().map(|k| first.find(k).unwrap()).collect();
    assert!(positions.windows(2).all(|w| w[0] < w[1]), "{first}");
    let v: Value = serde_json::from_str(first).unwrap();
    assert_eq!(v["variant"], "reasoning-2hop");
    assert_eq!(v["id"], "reasoning-2hop-000000");

    let stats = machine(&["stats", "--in", &out_dir]);
    let names: Vec<&str> = stats["splits"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["split"].as_str().unwrap())
        .collect();
    assert_eq!(names, ["train", "validation", "test"]);
}

#[test]
fn convert_unli_fixture() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = path(tmp.path());
    let csv = path(&fixtures().join("unli_sample.csv"));
    let v = machine(&[
        "convert-unli",
        "--in",
        &csv,
        "--premise-col",
        "premise",
        "--hypothesis-col",
        "hypothesis",
        "--prob-col",
        "unli",
        "--split-col",
        "split",
        "--out",
        &out_dir,
    ]);
    assert_eq!(v["splits"]["train"], 5);
    assert_eq!(v["splits"]["validation"], 3);
    assert_eq!(v["splits"]["test"], 4);
    let train = std::fs::read_to_string(tmp.path().join("train.jsonl")).unwrap();
    let first: Value = serde_json::from_str(train.lines().next().unwrap()).unwrap();
    assert_eq!(first["valid_wep"], "certain");
    assert_eq!(first["event_text"], "a man takes a picture");
    assert_eq!(first["provenance"]["formula"], "f0");

    let missing = wepkit(&[
        "convert-unli",
        "--in",
        &csv,
        "--premise-col",
        "premise",
        "--hypothesis-col",
        "hypothesis",
        "--prob-col",
        "score",
        "--out",
        &out_dir,
    ]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn random_scores_round_trip_through_score() {
    let tmp = tempfile::tempdir().unwrap();
    let data = path(&tmp.path().join("d"));
    let scores = path(&tmp.path().join("s.jsonl"));
    assert!(
        wepkit(&["generate", "--hops", "1", "--n", "200", "--seed", "3", "--out", &data])
            .status
            .success()
    );
    let v = machine(&[
        "random-scores",
        "--dataset",
        &data,
        "--seed",
        "9",
        "--out",
        &scores,
    ]);
    assert_eq!(v["records"], 400);
    let report = machine(&["score", "--dataset", &data, "--scores", &scores]);
    assert_eq!(report["groups"][0]["accuracy"]["total"], 20);
}

#[test]
fn exit_codes() {
    assert_eq!(
        wepkit(&["generate", "--hops", "3", "--out", "/tmp/x"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        wepkit(&["analyze", "--delta", "0.9"]).status.code(),
        Some(1)
    );
    assert_eq!(
        wepkit(&["stats", "--in", "/definitely/not/here"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(wepkit(&["--version"]).status.code(), Some(0));
}

#[test]
fn config_file_values_yield_to_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.conf");
    std::fs::write(&cfg, "# analysis defaults\nhops = 2\nn = 50\ndelta = 0.1\n").unwrap();
    let v = machine(&["analyze", "--config", &path(&cfg), "--n", "40"]);
    assert_eq!(v["n_examples"], 40);
    assert_eq!(v["delta"], 0.1);
}
