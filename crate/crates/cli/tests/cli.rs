mod common;

use std::fs;

use approx::assert_abs_diff_eq;
use common::*;
use tempowic_cli::commands::{CALIBRATION_FILE, HEAD_FILE, PREDICTIONS_FILE};
use tempowic_cli::*;
use tempowic_core::{CalibrationResult, ContrastiveHead, Grid, Mode, TrainConfig};

fn s(p: &std::path::Path) -> String {
    p.display().to_string()
}

#[test]
fn validate_prints_fixture_stats() {
    let f = fixtures();
    let out = tempowic(&["validate", "--pairs", &s(&f.join("pairs.jsonl")), "--labels", &s(&f.join("labels.tsv"))]);
    assert!(out.status.success());
    let printed: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(f.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(printed, manifest);
}

#[test]
fn corrupt_line_exits_2_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let f = fixtures();
    let mut text = fs::read_to_string(f.join("pairs.jsonl")).unwrap();
    text = text.replacen("\"date\":\"2020-03\"", "\"date\":\"2020-13\"", 1);
    let mut lines: Vec<&str> = text.lines().collect();
    lines.insert(4, "{\"id\": \"broken\"");
    let path = dir.path().join("bad.jsonl");
    fs::write(&path, lines.join("\n")).unwrap();
    let out = tempowic(&["validate", "--pairs", &s(&path)]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 1:") && stderr.contains("invalid month"), "{stderr}");

    fs::write(&path, lines[1..].join("\n")).unwrap();
    let out = tempowic(&["validate", "--pairs", &s(&path)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 4:"));
}

#[test]
fn calibrate_records_default_grids() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = fixture_config();
    cfg.out = Some(dir.path().to_path_buf());
    let done = cmd_calibrate(&cfg).unwrap();
    assert_eq!(done.result.grid, Grid::COSINE);
    assert_eq!(done.result.trace.len(), 1001);
    assert_eq!(done.result.best_metric, 1.0);
    let written: CalibrationResult = serde_json::from_str(&fs::read_to_string(dir.path().join(CALIBRATION_FILE)).unwrap()).unwrap();
    assert_eq!(written, done.result);

    cfg.mode = Some(Mode::Euclidean);
    let done = cmd_calibrate(&cfg).unwrap();
    assert_eq!(done.result.grid, Grid::EUCLIDEAN);
    assert_eq!(done.result.trace.len(), 401);
    let json = fs::read_to_string(dir.path().join(CALIBRATION_FILE)).unwrap();
    assert!(json.starts_with(r#"{"mode":"euclidean","lo":0.0,"hi":4.0,"step":0.01,"#), "{json}");
}

#[test]
fn calibrate_without_labels_exits_2() {
    let f = fixtures();
    let out = tempowic(&[
        "calibrate",
        "--pairs", &s(&f.join("pairs.jsonl")),
        "--emb-index", &s(&f.join("dump.index.jsonl")),
        "--emb-blob", &s(&f.join("dump.blob")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let out = tempowic(&[
        "calibrate",
        "--pairs", &s(&f.join("pairs.jsonl")),
        "--labels", "/nonexistent/labels.tsv",
        "--emb-index", &s(&f.join("dump.index.jsonl")),
        "--emb-blob", &s(&f.join("dump.blob")),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn predict_follows_calibration_and_input_order() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = fixture_config();
    cfg.out = Some(dir.path().to_path_buf());
    let calibrated = cmd_calibrate(&cfg).unwrap();

    let mut predict = fixture_config();
    predict.labels = None;
    predict.calibration = Some(calibrated.path.clone());
    predict.out = Some(dir.path().to_path_buf());
    let done = cmd_predict(&predict).unwrap();
    assert_eq!(done.threshold, calibrated.result.best_threshold);
    let tsv = fs::read_to_string(dir.path().join(PREDICTIONS_FILE)).unwrap();
    let ids: Vec<&str> = tsv.lines().map(|l| l.split('\t').next().unwrap()).collect();
    let expected: Vec<String> = (0..20).map(|i| format!("fx-{i:02}")).collect();
    assert_eq!(ids, expected);
    assert!(tsv.lines().all(|l| l.split('\t').count() == 3));

    predict.labels = Some(fixtures().join("labels.tsv"));
    predict.pred = Some(dir.path().join(PREDICTIONS_FILE));
    let report = cmd_evaluate(&predict).unwrap();
    assert_eq!(report.macro_f1, 1.0);
}

#[test]
fn predict_threshold_override() {
    let dir = tempfile::tempdir().unwrap();
    let f = fixtures();
    let out = tempowic(&[
        "predict",
        "--pairs", &s(&f.join("pairs.jsonl")),
        "--emb-index", &s(&f.join("dump.index.jsonl")),
        "--emb-blob", &s(&f.join("dump.blob")),
        "--threshold", "0.917",
        "--out", &s(dir.path()),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("threshold 0.917"));
    let tsv = fs::read_to_string(dir.path().join(PREDICTIONS_FILE)).unwrap();
    for line in tsv.lines() {
        let cols: Vec<&str> = line.split('\t').collect();
        let score: f64 = cols[2].parse().unwrap();
        assert_eq!(cols[1], if score >= 0.917 { "1" } else { "0" });
    }
}

#[test]
fn predict_missing_embedding_names_the_pair() {
    let dir = tempfile::tempdir().unwrap();
    let f = fixtures();
    let mut pairs = fs::read_to_string(f.join("pairs.jsonl")).unwrap();
    pairs.push_str(&pairs.lines().next().unwrap().replace("fx-00", "ghost-7"));
    pairs.push('\n');
    let path = dir.path().join("pairs.jsonl");
    fs::write(&path, pairs).unwrap();
    let out = tempowic(&[
        "predict",
        "--pairs", &s(&path),
        "--emb-index", &s(&f.join("dump.index.jsonl")),
        "--emb-blob", &s(&f.join("dump.blob")),
        "--out", &s(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ghost-7"));
}

#[test]
fn evaluate_hand_case_and_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let pred = dir.path().join("pred.tsv");
    let gold = dir.path().join("gold.tsv");
    fs::write(&pred, "a\t1\t0.9\nb\t1\t0.8\nc\t0\t0.1\nd\t0\t0.2\n").unwrap();
    fs::write(&gold, "a\t1\nb\t0\nc\t0\nd\t0\n").unwrap();
    let cfg = RunConfig { pred: Some(pred.clone()), labels: Some(gold.clone()), ..Default::default() };
    let report = cmd_evaluate(&cfg).unwrap();
    assert_abs_diff_eq!(report.macro_f1, 11.0 / 15.0, epsilon = 1e-9);
    assert_eq!(report.accuracy, 0.75);

    fs::write(&gold, "a\t1\nb\t0\nc\t0\n").unwrap();
    let out = tempowic(&["evaluate", "--pred", &s(&pred), "--labels", &s(&gold)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("length mismatch"));
}

#[test]
fn train_head_zero_epochs_is_initialization() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = fixture_config();
    cfg.out = Some(dir.path().to_path_buf());
    cfg.epochs = Some(0);
    cfg.seed = Some(5);
    cfg.proj_dim = Some(6);
    let done = cmd_train_head(&cfg).unwrap();
    let written: ContrastiveHead = serde_json::from_str(&fs::read_to_string(dir.path().join(HEAD_FILE)).unwrap()).unwrap();
    let init = ContrastiveHead::init(8, &TrainConfig { seed: 5, proj_dim: 6, epochs: 0, ..Default::default() });
    assert_eq!(written, init);
    assert_eq!(done.head, init);
    assert_eq!(done.calibration.grid, Grid::EUCLIDEAN);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = fixture_config();
    cfg.mode = Some(Mode::Euclidean);
    cfg.step = Some(0.5);
    let path = dir.path().join("config.json");
    fs::write(&path, serde_json::to_string(&cfg).unwrap()).unwrap();
    let out = tempowic(&["calibrate", "--config", &s(&path), "--step", "0.25", "--out", &s(dir.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r: CalibrationResult = serde_json::from_str(&fs::read_to_string(dir.path().join(CALIBRATION_FILE)).unwrap()).unwrap();
    assert_eq!((r.mode, r.grid.step, r.trace.len()), (Mode::Euclidean, 0.25, 17));
}

#[test]
fn route_command() {
    let route = fixtures().join("route.json");
    for (date, model) in [("2019-11", "2019"), ("2020-03", "2020"), ("2021-05", "2020"), ("2018-02", "2019")] {
        let out = tempowic(&["route", "--route", &s(&route), "--date", date]);
        assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), format!("twitter-roberta-base-{model}"));
    }
    let cfg = fixture_config();
    let table = cmd_route(&cfg).unwrap();
    assert_eq!(table.lines().count(), 40);
    // Every dumped record was produced by the model its date routes to.
    let index = fs::read_to_string(fixtures().join("dump.index.jsonl")).unwrap();
    for (line, entry) in table.lines().zip(index.lines().skip(1)) {
        let model = line.rsplit('\t').next().unwrap();
        assert!(entry.contains(&format!("\"model_id\":\"{model}\"")), "{line} vs {entry}");
    }
    let out = tempowic(&["route", "--route", &s(&route), "--date", "2020-00"]);
    assert_eq!(out.status.code(), Some(2));
}
