//! Temporal word-in-context disambiguation.
//!
//! Two tweets share a target word; the task is to decide whether the word
//! carries the same meaning in both. This crate works on contextual
//! embedding dumps written by an external extractor and provides:
//!
//! - [`dataset`]: pair-file parsing, gold labels, statistics and routing of
//!   dated tweets to time-indexed encoders.
//! - [`embstore`]: the index + blob dump format holding per-token hidden
//!   layers and pooled vectors.
//! - [`features`]: target-word feature construction (subtoken mean over the
//!   last four layers, concatenated with the pooled vector).
//! - [`scoring`]: cosine similarity, Euclidean distance and the thresholded
//!   decision rule.
//! - [`calibration`]: macro-F1 / accuracy reports and exhaustive threshold
//!   grid search.
//! - [`contrastive`]: a Siamese projection head trained with a margin
//!   contrastive loss over frozen features.

pub mod calibration;
pub mod contrastive;
pub mod dataset;
pub mod embstore;
pub mod error;
pub mod features;
pub mod scoring;

pub use calibration::{
    metric_report, sweep_thresholds, CalibrationResult, Grid, MetricReport, Objective,
    SweepOptions, TieBreak,
};
pub use contrastive::{train_head, ContrastiveHead, TrainConfig, TrainReport};
pub use dataset::{Label, ModelRoute, PairRecord, TweetDate, TweetInstance};
pub use embstore::{EmbeddingRecord, EmbeddingStore, Side};
pub use error::{Error, Result};
pub use features::{build_target_feature, FeaturePair, TargetFeature};
pub use scoring::{cosine_similarity, decide, euclidean_distance, Mode};

/// Cosine similarity threshold of the best time-aware configuration.
pub const DEFAULT_COSINE_THRESHOLD: f64 = 0.917;
/// Euclidean distance threshold of the best contrastive configuration.
pub const DEFAULT_EUCLIDEAN_THRESHOLD: f64 = 1.148;
/// Batch size used when scoring pairs in cosine mode.
pub const COSINE_BATCH_SIZE: usize = 64;
/// Minibatch size for contrastive training.
pub const CONTRASTIVE_BATCH_SIZE: usize = 8;
