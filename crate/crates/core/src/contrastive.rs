//! Siamese projection head trained with a margin contrastive loss.
//!
//! Both features of a pair go through the same `k x n` matrix `P`; the pair
//! loss over the projected distance `d = |P u - P v|` is
//!
//! ```text
//! L = y d^2 + (1 - y) max(0, m - d)^2        (y = 1 for SAME)
//! ```
//!
//! Training is plain minibatch gradient descent with a seeded ChaCha stream
//! for both the initialization and the per-epoch shuffles, so a run is fully
//! determined by its configuration and input order.

use rand::distributions::{Distribution, Uniform};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Label;
use crate::error::{Error, Result};
use crate::features::FeaturePair;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub margin: f64,
    pub proj_dim: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            batch_size: crate::CONTRASTIVE_BATCH_SIZE,
            learning_rate: 0.01,
            seed: 0,
            margin: 1.0,
            proj_dim: 128,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig("learning rate must be positive".into()));
        }
        if !(self.margin > 0.0 && self.margin.is_finite()) {
            return Err(Error::InvalidConfig("margin must be positive".into()));
        }
        if self.proj_dim == 0 {
            return Err(Error::InvalidConfig("projection dim must be at least 1".into()));
        }
        Ok(())
    }
}

/// Projection `P` (`k` rows of `dim` inputs) shared by both sides of a pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastiveHead {
    pub k: usize,
    pub dim: usize,
    pub margin: f64,
    /// Row-major `k * dim` entries.
    pub weights: Vec<f64>,
    pub seed: u64,
    pub epochs: usize,
}

impl ContrastiveHead {
    /// Seeded uniform initialization in `[-1/sqrt(dim), 1/sqrt(dim))`.
    pub fn init(dim: usize, cfg: &TrainConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        Self::init_with(dim, cfg, &mut rng)
    }

    fn init_with(dim: usize, cfg: &TrainConfig, rng: &mut ChaCha8Rng) -> Self {
        let bound = 1.0 / (dim as f64).sqrt();
        let dist = Uniform::new(-bound, bound);
        Self {
            k: cfg.proj_dim,
            dim,
            margin: cfg.margin,
            weights: (0..cfg.proj_dim * dim).map(|_| dist.sample(rng)).collect(),
            seed: cfg.seed,
            epochs: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.dim == 0 {
            return Err(Error::InvalidConfig("head dimensions must be positive".into()));
        }
        if self.weights.len() != self.k * self.dim {
            return Err(Error::InvalidConfig(format!(
                "head holds {} weights, expected {}",
                self.weights.len(),
                self.k * self.dim
            )));
        }
        if self.weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidConfig("non-finite head weight".into()));
        }
        if self.margin.is_nan() || self.margin <= 0.0 {
            return Err(Error::InvalidConfig("margin must be positive".into()));
        }
        Ok(())
    }

    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::LengthMismatch {
                left: x.len(),
                right: self.dim,
            });
        }
        Ok(matvec(&self.weights, self.dim, x))
    }

    /// `|P u - P v|`.
    pub fn distance(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        let diff = difference(u, v)?;
        let z = self.project(&diff)?;
        Ok(norm(&z))
    }
}

pub fn head_distance(head: &ContrastiveHead, u: &[f64], v: &[f64]) -> Result<f64> {
    head.distance(u, v)
}

fn matvec(weights: &[f64], cols: usize, x: &[f64]) -> Vec<f64> {
    weights
        .chunks_exact(cols)
        .map(|row| row.iter().zip(x).map(|(w, v)| w * v).sum())
        .collect()
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn difference(u: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    if u.len() != v.len() {
        return Err(Error::LengthMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    Ok(u.iter().zip(v).map(|(a, b)| a - b).collect())
}

fn target(y: Label) -> f64 {
    match y {
        Label::Same => 1.0,
        Label::Different => 0.0,
    }
}

fn loss_from_distance(d: f64, y: Label, margin: f64) -> f64 {
    let y = target(y);
    let hinge = (margin - d).max(0.0);
    y * d * d + (1.0 - y) * hinge * hinge
}

/// Coefficient `c` with `dL/dx = c * x` for `x = u - v`, `d = |x|`.
fn gradient_scale(d: f64, y: Label, margin: f64) -> f64 {
    let y = target(y);
    let push = if d > 0.0 {
        2.0 * (1.0 - y) * (margin - d).max(0.0) / d
    } else {
        0.0
    };
    2.0 * y - push
}

pub fn contrastive_loss(u: &[f64], v: &[f64], y: Label, margin: f64) -> Result<f64> {
    let d = norm(&difference(u, v)?);
    Ok(loss_from_distance(d, y, margin))
}

/// `(dL/du, dL/dv)`. At `d = 0` the push term is taken as zero.
pub fn loss_gradients(u: &[f64], v: &[f64], y: Label, margin: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let x = difference(u, v)?;
    let c = gradient_scale(norm(&x), y, margin);
    let du: Vec<f64> = x.iter().map(|v| c * v).collect();
    let dv = du.iter().map(|g| -g).collect();
    Ok((du, dv))
}

/// Loss of a pair seen through `head` and its gradient with respect to the
/// head weights (row-major, same layout as `head.weights`).
pub fn projected_loss_gradient(head: &ContrastiveHead, u: &[f64], v: &[f64], y: Label) -> Result<(f64, Vec<f64>)> {
    let mut grad = vec![0.0; head.weights.len()];
    let loss = accumulate_gradient(head, u, v, y, 1.0, &mut grad)?;
    Ok((loss, grad))
}

/// Adds `weight * dL/dP` into `grad` and returns the loss.
fn accumulate_gradient(
    head: &ContrastiveHead,
    u: &[f64],
    v: &[f64],
    y: Label,
    weight: f64,
    grad: &mut [f64],
) -> Result<f64> {
    let x = difference(u, v)?;
    let z = head.project(&x)?;
    let d = norm(&z);
    let c = gradient_scale(d, y, head.margin) * weight;
    if c != 0.0 {
        for (row, zi) in grad.chunks_exact_mut(head.dim).zip(&z) {
            let g = c * zi;
            for (w, xj) in row.iter_mut().zip(&x) {
                *w += g * xj;
            }
        }
    }
    Ok(loss_from_distance(d, y, head.margin))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub head: ContrastiveHead,
    /// Mean per-pair loss of each epoch, measured before each batch update.
    pub epoch_losses: Vec<f64>,
}

type LabeledPair<'a> = (&'a [f64], &'a [f64], Label);

fn labeled(pairs: &[FeaturePair]) -> Result<Vec<LabeledPair<'_>>> {
    let mut dim = None;
    pairs
        .iter()
        .map(|p| {
            let y = p.label.ok_or_else(|| Error::Unlabeled(p.id.clone()))?;
            let (u, v) = (p.first.vector.as_slice(), p.second.vector.as_slice());
            let d = *dim.get_or_insert(u.len());
            if u.len() != d || v.len() != d {
                return Err(Error::LengthMismatch {
                    left: d,
                    right: if u.len() != d { u.len() } else { v.len() },
                });
            }
            Ok((u, v, y))
        })
        .collect()
}

pub fn train_head(pairs: &[FeaturePair], cfg: &TrainConfig) -> Result<TrainReport> {
    cfg.validate()?;
    if pairs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let data = labeled(pairs)?;
    let dim = data[0].0.len();
    if dim == 0 {
        return Err(Error::InvalidConfig("feature dimension must be positive".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut head = ContrastiveHead::init_with(dim, cfg, &mut rng);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut grad = vec![0.0; head.weights.len()];
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);

    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let weight = 1.0 / batch.len() as f64;
            for &i in batch {
                let (u, v, y) = data[i];
                total += accumulate_gradient(&head, u, v, y, weight, &mut grad)?;
            }
            for (w, g) in head.weights.iter_mut().zip(&grad) {
                *w -= cfg.learning_rate * g;
            }
        }
        epoch_losses.push(total / data.len() as f64);
        head.epochs += 1;
    }
    if head.weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::InvalidConfig(
            "training diverged (non-finite weights); lower the learning rate".into(),
        ));
    }
    Ok(TrainReport { head, epoch_losses })
}
