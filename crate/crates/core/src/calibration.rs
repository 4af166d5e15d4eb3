//! Classification metrics and decision-threshold calibration.
//!
//! [`sweep_thresholds`] evaluates every point of a threshold grid and keeps
//! the one maximizing the objective (macro-F1 by default). Objective values
//! are compared as exact rationals, so thresholds whose confusion matrices
//! score equally are recognized as ties regardless of rounding.

use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::dataset::Label;
use crate::error::{Error, Result};
use crate::scoring::Mode;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Number of gold instances of the class.
    pub support: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerClass {
    #[serde(rename = "0")]
    pub different: ClassMetrics,
    #[serde(rename = "1")]
    pub same: ClassMetrics,
}

impl PerClass {
    pub fn get(&self, label: Label) -> &ClassMetrics {
        match label {
            Label::Different => &self.different,
            Label::Same => &self.same,
        }
    }
}

/// Counts indexed `[gold][predicted]`, with 0 = DIFFERENT and 1 = SAME.
pub type Confusion = [[usize; 2]; 2];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub macro_f1: f64,
    pub accuracy: f64,
    pub per_class: PerClass,
    pub confusion: Confusion,
}

fn ratio_or_zero(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn class_metrics(confusion: &Confusion, class: usize) -> ClassMetrics {
    let other = 1 - class;
    let tp = confusion[class][class];
    let fp = confusion[other][class];
    let fn_ = confusion[class][other];
    let precision = ratio_or_zero(tp, tp + fp);
    let recall = ratio_or_zero(tp, tp + fn_);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    ClassMetrics {
        precision,
        recall,
        f1,
        support: tp + fn_,
    }
}

pub fn confusion(pred: &[Label], gold: &[Label]) -> Result<Confusion> {
    if pred.len() != gold.len() {
        return Err(Error::LengthMismatch {
            left: pred.len(),
            right: gold.len(),
        });
    }
    let mut c = [[0usize; 2]; 2];
    for (p, g) in pred.iter().zip(gold) {
        c[g.as_u8() as usize][p.as_u8() as usize] += 1;
    }
    Ok(c)
}

pub fn report_from_confusion(confusion: Confusion) -> Result<MetricReport> {
    let n: usize = confusion.iter().flatten().sum();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let different = class_metrics(&confusion, 0);
    let same = class_metrics(&confusion, 1);
    Ok(MetricReport {
        macro_f1: (different.f1 + same.f1) / 2.0,
        accuracy: (confusion[0][0] + confusion[1][1]) as f64 / n as f64,
        per_class: PerClass { different, same },
        confusion,
    })
}

/// Macro-F1, accuracy and per-class scores. A class with no gold and no
/// predicted instances has F1 = 0.
pub fn metric_report(pred: &[Label], gold: &[Label]) -> Result<MetricReport> {
    if pred.is_empty() && gold.is_empty() {
        return Err(Error::EmptyInput);
    }
    report_from_confusion(confusion(pred, gold)?)
}

/// Inclusive threshold grid `lo, lo + step, ..., hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Grid {
    /// Cosine-similarity grid.
    pub const COSINE: Grid = Grid {
        lo: 0.0,
        hi: 1.0,
        step: 0.001,
    };
    /// Euclidean-distance grid.
    pub const EUCLIDEAN: Grid = Grid {
        lo: 0.0,
        hi: 4.0,
        step: 0.01,
    };

    pub fn new(lo: f64, hi: f64, step: f64) -> Result<Self> {
        let grid = Self { lo, hi, step };
        grid.validate()?;
        Ok(grid)
    }

    pub fn default_for(mode: Mode) -> Self {
        match mode {
            Mode::CosineSim => Self::COSINE,
            Mode::Euclidean => Self::EUCLIDEAN,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.step.is_finite()) {
            return Err(Error::InvalidGrid("bounds and step must be finite".into()));
        }
        if self.step <= 0.0 {
            return Err(Error::InvalidGrid(format!("non-positive step {}", self.step)));
        }
        if self.lo > self.hi {
            return Err(Error::InvalidGrid(format!("lo {} > hi {}", self.lo, self.hi)));
        }
        if self.len() > 100_000_000 {
            return Err(Error::InvalidGrid("more than 1e8 grid points".into()));
        }
        Ok(())
    }

    /// `floor((hi - lo) / step) + 1`, tolerant of the quotient landing a hair
    /// below an integer.
    pub fn len(&self) -> usize {
        let q = (self.hi - self.lo) / self.step;
        (q + 1e-9 * q.max(1.0)).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid point `k`, computed as `lo + k * step` and rounded to 12 decimal
    /// places so that decimal grids hit their decimal values exactly.
    pub fn point(&self, k: usize) -> f64 {
        let raw = self.lo + k as f64 * self.step;
        if raw.abs() < 1e3 {
            (raw * 1e12).round() / 1e12
        } else {
            raw
        }
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|k| self.point(k))
    }
}

/// Quantity maximized by the sweep.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Unweighted mean of the F1 of both classes.
    #[default]
    MacroF1,
    /// F1 of the SAME class only.
    PositiveF1,
}

/// Which grid point wins when several attain the best objective.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    /// Smallest threshold attaining the maximum.
    #[default]
    Lowest,
    /// Middle of the first contiguous run of grid points attaining the
    /// maximum (lower middle for runs of even length).
    PlateauCenter,
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Objective::MacroF1 => "macro_f1",
            Objective::PositiveF1 => "positive_f1",
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SweepOptions {
    pub objective: Objective,
    pub tie_break: TieBreak,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub mode: Mode,
    #[serde(flatten)]
    pub grid: Grid,
    #[serde(default)]
    pub objective: Objective,
    #[serde(default)]
    pub tie_break: TieBreak,
    pub best_threshold: f64,
    pub best_metric: f64,
    /// `(threshold, metric)` for every grid point in ascending order.
    pub trace: Vec<(f64, f64)>,
}

fn f1_ratio(tp: u64, fp: u64, fn_: u64) -> Ratio<u64> {
    let den = 2 * tp + fp + fn_;
    if den == 0 {
        Ratio::from_integer(0)
    } else {
        Ratio::new(2 * tp, den)
    }
}

fn ratio_to_f64(r: Ratio<u64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Scores sorted ascending with a running count of SAME gold labels, which
/// turns every threshold evaluation into a binary search.
struct SortedScores {
    scores: Vec<f64>,
    same_prefix: Vec<u64>,
}

impl SortedScores {
    fn new(scores: &[f64], gold: &[Label]) -> Self {
        let mut pairs: Vec<(f64, Label)> = scores.iter().copied().zip(gold.iter().copied()).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut same_prefix = Vec::with_capacity(pairs.len() + 1);
        same_prefix.push(0);
        let mut acc = 0;
        for (_, g) in &pairs {
            acc += (*g == Label::Same) as u64;
            same_prefix.push(acc);
        }
        Self {
            scores: pairs.into_iter().map(|(s, _)| s).collect(),
            same_prefix,
        }
    }

    /// `(tp, fp, fn, tn)` with SAME as the positive class.
    fn counts(&self, mode: Mode, threshold: f64) -> (u64, u64, u64, u64) {
        let n = self.scores.len() as u64;
        let total_same = self.same_prefix[self.scores.len()];
        let below = self.scores.partition_point(|s| *s < threshold);
        let (pred_same, tp) = match mode {
            Mode::CosineSim => (n - below as u64, total_same - self.same_prefix[below]),
            Mode::Euclidean => (below as u64, self.same_prefix[below]),
        };
        let fp = pred_same - tp;
        let fn_ = total_same - tp;
        let tn = n - tp - fp - fn_;
        (tp, fp, fn_, tn)
    }
}

fn objective_value(objective: Objective, (tp, fp, fn_, tn): (u64, u64, u64, u64)) -> Ratio<u64> {
    let same = f1_ratio(tp, fp, fn_);
    match objective {
        Objective::PositiveF1 => same,
        Objective::MacroF1 => (same + f1_ratio(tn, fn_, fp)) / 2,
    }
}

/// Exhaustive threshold search with the default options: macro-F1, smallest
/// threshold among ties.
pub fn sweep_thresholds(scores: &[f64], gold: &[Label], mode: Mode, grid: Grid) -> Result<CalibrationResult> {
    sweep_thresholds_with(scores, gold, mode, grid, SweepOptions::default())
}

pub fn sweep_thresholds_with(
    scores: &[f64],
    gold: &[Label],
    mode: Mode,
    grid: Grid,
    options: SweepOptions,
) -> Result<CalibrationResult> {
    if scores.len() != gold.len() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: gold.len(),
        });
    }
    if scores.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::NonFiniteScore(i));
    }
    grid.validate()?;

    let sorted = SortedScores::new(scores, gold);
    let values: Vec<(f64, Ratio<u64>)> = grid
        .points()
        .map(|t| (t, objective_value(options.objective, sorted.counts(mode, t))))
        .collect();

    let best = values
        .iter()
        .map(|(_, v)| *v)
        .max()
        .expect("grid has at least one point");
    let first = values
        .iter()
        .position(|(_, v)| *v == best)
        .expect("maximum is attained");
    let chosen = match options.tie_break {
        TieBreak::Lowest => first,
        TieBreak::PlateauCenter => {
            let run = values[first..].iter().take_while(|(_, v)| *v == best).count();
            first + (run - 1) / 2
        }
    };

    Ok(CalibrationResult {
        mode,
        grid,
        objective: options.objective,
        tie_break: options.tie_break,
        best_threshold: values[chosen].0,
        best_metric: ratio_to_f64(best),
        trace: values.into_iter().map(|(t, v)| (t, ratio_to_f64(v))).collect(),
    })
}
