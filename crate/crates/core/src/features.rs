//! Target-word features.
//!
//! A target occurrence is represented by the mean of its subtoken vectors in
//! each of the last four stored layers, averaged over those layers, followed
//! by the record's pooled vector: `2 * D` values in total.

use std::path::Path;

use crate::dataset::{Label, PairRecord};
use crate::embstore::{
    write_dump_files, DumpFormat, EmbeddingRecord, EmbeddingStore, Side, TokenSpan,
};
use crate::error::{Error, Result};

/// Number of trailing hidden layers averaged into a feature.
pub const FEATURE_LAYERS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct TargetFeature {
    pub sample_id: String,
    pub side: Side,
    pub model_id: String,
    pub n_subtokens: usize,
    /// Layer mean of the target subtokens, then the pooled vector.
    pub vector: Vec<f64>,
}

impl TargetFeature {
    pub fn dim(&self) -> usize {
        self.vector.len()
    }
}

/// Both features of one sample, with its gold label when known.
#[derive(Debug, Clone, PartialEq)]
pub struct FeaturePair {
    pub id: String,
    pub first: TargetFeature,
    pub second: TargetFeature,
    pub label: Option<Label>,
}

/// Indices of the tokens overlapping `[start, end)`, skipping `(0, 0)`
/// special tokens.
pub fn align_target_span(token_spans: &[TokenSpan], span: (usize, usize)) -> Result<Vec<usize>> {
    let (start, end) = span;
    let hits: Vec<usize> = token_spans
        .iter()
        .enumerate()
        .filter(|(_, &(s, e))| (s, e) != (0, 0) && s < end && start < e)
        .map(|(i, _)| i)
        .collect();
    if hits.is_empty() {
        return Err(Error::UncoveredSpan { start, end });
    }
    Ok(hits)
}

/// Mean of the selected rows of a row-major `rows.len() / dim` by `dim` matrix.
pub fn subtoken_mean(rows: &[f64], dim: usize, indices: &[usize]) -> Result<Vec<f64>> {
    if indices.is_empty() {
        return Err(Error::EmptySelection);
    }
    let n_rows = rows.len().checked_div(dim).unwrap_or(0);
    let mut acc = vec![0.0; dim];
    for &i in indices {
        if i >= n_rows {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: n_rows,
            });
        }
        for (a, v) in acc.iter_mut().zip(&rows[i * dim..(i + 1) * dim]) {
            *a += v;
        }
    }
    let n = indices.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    Ok(acc)
}

pub fn build_target_feature(rec: &EmbeddingRecord, span: (usize, usize)) -> Result<TargetFeature> {
    if rec.n_layers < FEATURE_LAYERS {
        return Err(Error::InsufficientLayers(rec.n_layers));
    }
    let indices = align_target_span(&rec.token_spans, span)?;
    let d = rec.dim;
    let mut vector = vec![0.0; 2 * d];
    for l in rec.n_layers - FEATURE_LAYERS..rec.n_layers {
        let mean = subtoken_mean(rec.layer(l), d, &indices)?;
        for (acc, v) in vector[..d].iter_mut().zip(mean) {
            *acc += v;
        }
    }
    vector[..d]
        .iter_mut()
        .for_each(|v| *v /= FEATURE_LAYERS as f64);
    vector[d..].copy_from_slice(&rec.pooled);
    if vector.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            sample_id: rec.sample_id.clone(),
            side: rec.side.as_u8(),
        });
    }
    Ok(TargetFeature {
        sample_id: rec.sample_id.clone(),
        side: rec.side,
        model_id: rec.model_id.clone(),
        n_subtokens: indices.len(),
        vector,
    })
}

/// Builds the features for both sides of a pair from an embedding store.
pub fn pair_features<B>(store: &EmbeddingStore<B>, pair: &PairRecord) -> Result<FeaturePair>
where
    B: std::io::Read + std::io::Seek,
{
    let feature = |side: Side| {
        let rec = store.read_record(&pair.id, side)?;
        let tweet = match side {
            Side::First => &pair.first,
            Side::Second => &pair.second,
        };
        build_target_feature(&rec, tweet.span())
    };
    Ok(FeaturePair {
        id: pair.id.clone(),
        first: feature(Side::First)?,
        second: feature(Side::Second)?,
        label: pair.label,
    })
}

/// Packs a feature into a one-layer, one-token dump record. The vector is
/// stored in both the layer slot and the pooled slot.
pub fn to_dump_record(feature: &TargetFeature) -> EmbeddingRecord {
    EmbeddingRecord {
        sample_id: feature.sample_id.clone(),
        side: feature.side,
        model_id: feature.model_id.clone(),
        n_layers: 1,
        n_tokens: 1,
        dim: feature.vector.len(),
        token_spans: vec![(0, 0)],
        layers: feature.vector.clone(),
        pooled: feature.vector.clone(),
    }
}

/// Writes a `feat-dump`. The subtoken count is not part of the format.
pub fn write_features(
    features: &[TargetFeature],
    index_path: impl AsRef<Path>,
    blob_path: impl AsRef<Path>,
) -> Result<()> {
    let records: Vec<EmbeddingRecord> = features.iter().map(to_dump_record).collect();
    write_dump_files(DumpFormat::Features, &records, index_path, blob_path)
}

pub fn read_feature<B>(store: &EmbeddingStore<B>, sample_id: &str, side: Side) -> Result<TargetFeature>
where
    B: std::io::Read + std::io::Seek,
{
    if store.header().format != DumpFormat::Features {
        return Err(Error::CorruptIndex("not a feat-dump".into()));
    }
    let rec = store.read_record(sample_id, side)?;
    if rec.n_layers != 1 || rec.n_tokens != 1 {
        return Err(Error::CorruptIndex(format!(
            "feature record ({sample_id}, side {side}) has L={}, T={}",
            rec.n_layers, rec.n_tokens
        )));
    }
    Ok(TargetFeature {
        sample_id: rec.sample_id,
        side: rec.side,
        model_id: rec.model_id,
        n_subtokens: 1,
        vector: rec.layers,
    })
}
