use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tempowic_core::{Grid, Mode, Objective, TieBreak, TrainConfig};

use crate::CliError;

/// Every setting a command may read. Each field can come from `--config`
/// (a JSON object with these keys) or from the matching flag; flags win.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub pairs: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub val_pairs: Option<PathBuf>,
    pub val_labels: Option<PathBuf>,
    pub emb_index: Option<PathBuf>,
    pub emb_blob: Option<PathBuf>,
    pub route: Option<PathBuf>,
    pub head: Option<PathBuf>,
    pub calibration: Option<PathBuf>,
    pub pred: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub date: Option<String>,
    pub mode: Option<Mode>,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub step: Option<f64>,
    pub threshold: Option<f64>,
    pub objective: Option<Objective>,
    pub tie_break: Option<TieBreak>,
    pub batch_size: Option<usize>,
    pub epochs: Option<usize>,
    pub lr: Option<f64>,
    pub margin: Option<f64>,
    pub proj_dim: Option<usize>,
    pub seed: Option<u64>,
}

macro_rules! overlay {
    ($base:ident, $top:ident, $($field:ident),* $(,)?) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field; } )*
    };
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
    }

    /// Fields set in `flags` replace those in `self`.
    pub fn overlay(mut self, flags: RunConfig) -> Self {
        overlay!(
            self, flags, pairs, labels, val_pairs, val_labels, emb_index, emb_blob, route, head,
            calibration, pred, out, date, mode, lo, hi, step, threshold, objective, tie_break,
            batch_size, epochs, lr, margin, proj_dim, seed,
        );
        self
    }

    pub fn require<'a>(&self, value: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, CliError> {
        let path = value
            .as_deref()
            .ok_or_else(|| CliError::input(format!("missing required --{flag}")))?;
        if !path.exists() {
            return Err(CliError::input(format!("--{flag} {}: no such file", path.display())));
        }
        Ok(path)
    }

    pub fn out_dir(&self) -> Result<PathBuf, CliError> {
        let dir = self.out.clone().unwrap_or_else(|| PathBuf::from("."));
        std::fs::create_dir_all(&dir)
            .map_err(|e| CliError::internal(format!("cannot create {}: {e}", dir.display())))?;
        Ok(dir)
    }

    pub fn mode_or(&self, default: Mode) -> Mode {
        self.mode.unwrap_or(default)
    }

    /// The sweep grid: the mode's default grid with any of lo / hi / step
    /// overridden.
    pub fn grid(&self, mode: Mode) -> Result<Grid, CliError> {
        let base = Grid::default_for(mode);
        Grid::new(
            self.lo.unwrap_or(base.lo),
            self.hi.unwrap_or(base.hi),
            self.step.unwrap_or(base.step),
        )
        .map_err(CliError::from)
    }

    pub fn train_config(&self) -> TrainConfig {
        let d = TrainConfig::default();
        TrainConfig {
            epochs: self.epochs.unwrap_or(d.epochs),
            batch_size: self.batch_size.unwrap_or(d.batch_size),
            learning_rate: self.lr.unwrap_or(d.learning_rate),
            seed: self.seed.unwrap_or(d.seed),
            margin: self.margin.unwrap_or(d.margin),
            proj_dim: self.proj_dim.unwrap_or(d.proj_dim),
        }
    }
}
