use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use tempowic_core::calibration::{report_from_confusion, sweep_thresholds_with, Confusion};
use tempowic_core::dataset::{attach_labels, compute_stats, parse_labels, parse_pairs, DatasetStats};
use tempowic_core::features::pair_features;
use tempowic_core::scoring::score;
use tempowic_core::{
    CalibrationResult, ContrastiveHead, EmbeddingStore, FeaturePair, Label, MetricReport, Mode,
    ModelRoute, PairRecord, SweepOptions, TrainConfig, TweetDate,
};

use crate::config::RunConfig;
use crate::CliError;

pub const CALIBRATION_FILE: &str = "calibration.json";
pub const PREDICTIONS_FILE: &str = "predictions.tsv";
pub const HEAD_FILE: &str = "head.json";
pub const TRAIN_LOG_FILE: &str = "train_log.json";
pub const METRICS_FILE: &str = "metrics.json";

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn in_file<T>(path: &Path, r: tempowic_core::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let write = || -> std::io::Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer(&mut w, value)?;
        w.write_all(b"\n")?;
        w.flush()
    };
    write().map_err(|e| CliError::internal(format!("writing {}: {e}", path.display())))
}

/// Pairs from `pairs`, with gold labels attached when `labels` is given.
pub fn load_pairs(pairs: &Path, labels: Option<&Path>) -> Result<Vec<PairRecord>, CliError> {
    let records = in_file(pairs, parse_pairs(open(pairs)?))?;
    match labels {
        None => Ok(records),
        Some(path) => {
            let labels = in_file(path, parse_labels(open(path)?))?;
            let labeled = in_file(path, attach_labels(records, &labels))?;
            Ok(labeled.records)
        }
    }
}

fn require_labels(records: &[PairRecord]) -> Result<Vec<Label>, CliError> {
    records
        .iter()
        .map(|r| r.label.ok_or_else(|| CliError::input(format!("pair {:?} has no gold label", r.id))))
        .collect()
}

fn load_store(cfg: &RunConfig) -> Result<EmbeddingStore, CliError> {
    let index = cfg.require(&cfg.emb_index, "emb-index")?;
    let blob = cfg.require(&cfg.emb_blob, "emb-blob")?;
    EmbeddingStore::open(index, blob).map_err(|e| CliError::input(format!("embedding dump: {e}")))
}

fn load_head(path: &Path) -> Result<ContrastiveHead, CliError> {
    let head: ContrastiveHead = serde_json::from_reader(open(path)?)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    in_file(path, head.validate())?;
    Ok(head)
}

/// Features for every pair, read from the dump `batch_size` pairs at a time.
pub fn load_features(
    store: &EmbeddingStore,
    records: &[PairRecord],
    batch_size: usize,
) -> Result<Vec<FeaturePair>, CliError> {
    let mut out = Vec::with_capacity(records.len());
    for batch in records.chunks(batch_size.max(1)) {
        for r in batch {
            let pair = pair_features(store, r)
                .map_err(|e| CliError::input(format!("pair {:?}: {e}", r.id)))?;
            out.push(pair);
        }
    }
    Ok(out)
}

/// How pair scores are produced: raw features under a mode, or distances
/// through a trained head.
pub enum Scorer {
    Raw(Mode),
    Head(ContrastiveHead),
}

impl Scorer {
    fn from_config(cfg: &RunConfig, default_mode: Mode) -> Result<Self, CliError> {
        match &cfg.head {
            Some(_) => {
                if cfg.mode == Some(Mode::CosineSim) {
                    return Err(CliError::input("--head scores are Euclidean distances; use --mode euclidean"));
                }
                Ok(Scorer::Head(load_head(cfg.require(&cfg.head, "head")?)?))
            }
            None => Ok(Scorer::Raw(cfg.mode_or(default_mode))),
        }
    }

    pub fn mode(&self) -> Mode {
        match self {
            Scorer::Raw(mode) => *mode,
            Scorer::Head(_) => Mode::Euclidean,
        }
    }

    pub fn score(&self, pair: &FeaturePair) -> Result<f64, CliError> {
        let (u, v) = (&pair.first.vector, &pair.second.vector);
        match self {
            Scorer::Raw(mode) => score(*mode, u, v),
            Scorer::Head(head) => head.distance(u, v),
        }
        .map_err(|e| CliError::input(format!("pair {:?}: {e}", pair.id)))
    }
}

fn default_batch(mode: Mode) -> usize {
    match mode {
        Mode::CosineSim => tempowic_core::COSINE_BATCH_SIZE,
        Mode::Euclidean => tempowic_core::CONTRASTIVE_BATCH_SIZE,
    }
}

fn sweep_options(cfg: &RunConfig) -> SweepOptions {
    SweepOptions {
        objective: cfg.objective.unwrap_or_default(),
        tie_break: cfg.tie_break.unwrap_or_default(),
    }
}

fn calibrate_on(
    cfg: &RunConfig,
    scorer: &Scorer,
    pairs: &[FeaturePair],
    gold: &[Label],
) -> Result<CalibrationResult, CliError> {
    let scores = pairs.iter().map(|p| scorer.score(p)).collect::<Result<Vec<_>, _>>()?;
    let mode = scorer.mode();
    Ok(sweep_thresholds_with(&scores, gold, mode, cfg.grid(mode)?, sweep_options(cfg))?)
}

pub fn cmd_validate(cfg: &RunConfig) -> Result<DatasetStats, CliError> {
    let pairs = cfg.require(&cfg.pairs, "pairs")?;
    let labels = match &cfg.labels {
        Some(_) => Some(cfg.require(&cfg.labels, "labels")?),
        None => None,
    };
    Ok(compute_stats(&load_pairs(pairs, labels)?))
}

pub struct Calibrated {
    pub result: CalibrationResult,
    pub path: PathBuf,
}

pub fn cmd_calibrate(cfg: &RunConfig) -> Result<Calibrated, CliError> {
    let records = load_pairs(cfg.require(&cfg.pairs, "pairs")?, Some(cfg.require(&cfg.labels, "labels")?))?;
    let gold = require_labels(&records)?;
    let scorer = Scorer::from_config(cfg, Mode::CosineSim)?;
    let store = load_store(cfg)?;
    let batch = cfg.batch_size.unwrap_or(default_batch(scorer.mode()));
    let features = load_features(&store, &records, batch)?;
    let result = calibrate_on(cfg, &scorer, &features, &gold)?;
    let path = cfg.out_dir()?.join(CALIBRATION_FILE);
    write_json(&path, &result)?;
    Ok(Calibrated { result, path })
}

pub struct Predicted {
    pub mode: Mode,
    pub threshold: f64,
    pub rows: usize,
    pub path: PathBuf,
}

pub fn cmd_predict(cfg: &RunConfig) -> Result<Predicted, CliError> {
    let calibration: Option<CalibrationResult> = match &cfg.calibration {
        Some(_) => {
            let path = cfg.require(&cfg.calibration, "calibration")?;
            Some(serde_json::from_reader(open(path)?).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?)
        }
        None => None,
    };
    let mut cfg = cfg.clone();
    if cfg.mode.is_none() && cfg.head.is_none() {
        cfg.mode = calibration.as_ref().map(|c| c.mode);
    }
    let scorer = Scorer::from_config(&cfg, Mode::CosineSim)?;
    let mode = scorer.mode();
    if let Some(c) = &calibration {
        if c.mode != mode {
            return Err(CliError::input(format!(
                "calibration was run in {} mode, predicting in {mode} mode",
                c.mode
            )));
        }
    }
    let threshold = cfg
        .threshold
        .or(calibration.as_ref().map(|c| c.best_threshold))
        .unwrap_or(match mode {
            Mode::CosineSim => tempowic_core::DEFAULT_COSINE_THRESHOLD,
            Mode::Euclidean => tempowic_core::DEFAULT_EUCLIDEAN_THRESHOLD,
        });
    if !threshold.is_finite() {
        return Err(CliError::input("threshold must be finite"));
    }

    let records = load_pairs(cfg.require(&cfg.pairs, "pairs")?, None)?;
    let store = load_store(&cfg)?;
    let batch = cfg.batch_size.unwrap_or(default_batch(mode));
    let features = load_features(&store, &records, batch)?;

    let mut body = String::new();
    for pair in &features {
        let s = scorer.score(pair)?;
        let label = tempowic_core::decide(s, mode, threshold);
        body.push_str(&format!("{}\t{}\t{}\n", pair.id, label, s));
    }
    let path = cfg.out_dir()?.join(PREDICTIONS_FILE);
    std::fs::write(&path, body).map_err(|e| CliError::internal(format!("writing {}: {e}", path.display())))?;
    Ok(Predicted {
        mode,
        threshold,
        rows: features.len(),
        path,
    })
}

pub fn cmd_evaluate(cfg: &RunConfig) -> Result<MetricReport, CliError> {
    let pred_path = cfg.require(&cfg.pred, "pred")?;
    let gold_path = cfg.require(&cfg.labels, "labels")?;
    let pred = in_file(pred_path, parse_labels(open(pred_path)?))?;
    let gold = in_file(gold_path, parse_labels(open(gold_path)?))?;
    if pred.len() != gold.len() {
        return Err(CliError::input(format!(
            "length mismatch: {} predictions vs {} gold labels",
            pred.len(),
            gold.len()
        )));
    }
    let mut by_id: HashMap<&str, Label> = HashMap::with_capacity(gold.len());
    for (id, label) in &gold {
        if by_id.insert(id, *label).is_some() {
            return Err(CliError::input(format!("duplicate gold id {id:?}")));
        }
    }
    let mut confusion: Confusion = [[0; 2]; 2];
    for (id, p) in &pred {
        let g = by_id
            .get(id.as_str())
            .ok_or_else(|| CliError::input(format!("prediction id {id:?} has no gold label")))?;
        confusion[g.as_u8() as usize][p.as_u8() as usize] += 1;
    }
    let report = report_from_confusion(confusion)?;
    if cfg.out.is_some() {
        write_json(&cfg.out_dir()?.join(METRICS_FILE), &report)?;
    }
    Ok(report)
}

#[derive(Debug, Serialize)]
struct TrainLog<'a> {
    config: &'a TrainConfig,
    n_train: usize,
    n_calibration: usize,
    epoch_losses: &'a [f64],
}

pub struct Trained {
    pub head: ContrastiveHead,
    pub epoch_losses: Vec<f64>,
    pub calibration: CalibrationResult,
    pub out_dir: PathBuf,
}

/// Trains a projection head, then calibrates a Euclidean threshold on the
/// validation pairs (the training pairs when no validation split is given).
pub fn cmd_train_head(cfg: &RunConfig) -> Result<Trained, CliError> {
    if cfg.mode == Some(Mode::CosineSim) {
        return Err(CliError::input("train-head calibrates Euclidean distances; use --mode euclidean"));
    }
    let train_cfg = cfg.train_config();
    train_cfg.validate()?;
    let records = load_pairs(cfg.require(&cfg.pairs, "pairs")?, Some(cfg.require(&cfg.labels, "labels")?))?;
    require_labels(&records)?;
    let store = load_store(cfg)?;
    let train = load_features(&store, &records, train_cfg.batch_size)?;

    let val = match (&cfg.val_pairs, &cfg.val_labels) {
        (None, None) => None,
        (Some(_), Some(_)) => {
            let records = load_pairs(
                cfg.require(&cfg.val_pairs, "val-pairs")?,
                Some(cfg.require(&cfg.val_labels, "val-labels")?),
            )?;
            let gold = require_labels(&records)?;
            Some((load_features(&store, &records, train_cfg.batch_size)?, gold))
        }
        _ => return Err(CliError::input("--val-pairs and --val-labels go together")),
    };

    let report = tempowic_core::train_head(&train, &train_cfg)?;
    let scorer = Scorer::Head(report.head.clone());
    let calibration = match &val {
        Some((pairs, gold)) => calibrate_on(cfg, &scorer, pairs, gold)?,
        None => {
            let gold: Vec<Label> = train.iter().filter_map(|p| p.label).collect();
            calibrate_on(cfg, &scorer, &train, &gold)?
        }
    };

    let out_dir = cfg.out_dir()?;
    write_json(&out_dir.join(HEAD_FILE), &report.head)?;
    write_json(&out_dir.join(CALIBRATION_FILE), &calibration)?;
    write_json(
        &out_dir.join(TRAIN_LOG_FILE),
        &TrainLog {
            config: &train_cfg,
            n_train: train.len(),
            n_calibration: val.as_ref().map_or(train.len(), |(p, _)| p.len()),
            epoch_losses: &report.epoch_losses,
        },
    )?;
    Ok(Trained {
        head: report.head,
        epoch_losses: report.epoch_losses,
        calibration,
        out_dir,
    })
}

/// Model ids for one `--date`, or for both tweets of every pair in `--pairs`
/// as `id<TAB>side<TAB>date<TAB>model` lines.
pub fn cmd_route(cfg: &RunConfig) -> Result<String, CliError> {
    let path = cfg.require(&cfg.route, "route")?;
    let text = std::fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let route = in_file(path, ModelRoute::from_json(&text))?;
    if let Some(date) = &cfg.date {
        let date: TweetDate = date.parse()?;
        return Ok(format!("{}\n", route.route(date)));
    }
    let pairs_path = cfg
        .pairs
        .as_ref()
        .ok_or_else(|| CliError::input("route needs --date or --pairs"))?;
    let records = load_pairs(cfg.require(&Some(pairs_path.clone()), "pairs")?, None)?;
    let mut out = String::new();
    for r in &records {
        for (side, tweet) in [(1, &r.first), (2, &r.second)] {
            out.push_str(&format!("{}\t{side}\t{}\t{}\n", r.id, tweet.date, route.route(tweet.date)));
        }
    }
    Ok(out)
}
