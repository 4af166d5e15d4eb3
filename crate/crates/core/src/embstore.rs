//! Embedding dumps: a JSON Lines index plus a raw little-endian `f32` blob.
//!
//! The first index line is a header, `{"format":"emb-dump","version":1}`.
//! Every following line describes one record and where its values live in
//! the blob. A record occupies `4 * (L*T*D + D)` bytes: the hidden layers in
//! `layers[l][t][d]` order (earliest stored layer first, final layer last)
//! followed by the pooled vector.
//!
//! Values are widened to `f64` when read. Since every stored value is an
//! `f32`, writing a record that was read from a dump reproduces its bytes.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which tweet of a pair a record belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Side {
    First,
    Second,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::First, Side::Second];

    pub fn as_u8(self) -> u8 {
        match self {
            Side::First => 1,
            Side::Second => 2,
        }
    }
}

impl TryFrom<u8> for Side {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Side::First),
            2 => Ok(Side::Second),
            other => Err(format!("side must be 1 or 2, got {other}")),
        }
    }
}

impl From<Side> for u8 {
    fn from(s: Side) -> u8 {
        s.as_u8()
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_u8())
    }
}

/// Character span of one token; special tokens carry `(0, 0)`.
pub type TokenSpan = (usize, usize);

/// Index header `format` tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DumpFormat {
    #[serde(rename = "emb-dump")]
    Embeddings,
    #[serde(rename = "feat-dump")]
    Features,
}

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DumpHeader {
    pub format: DumpFormat,
    pub version: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRecord {
    pub sample_id: String,
    pub side: Side,
    pub model_id: String,
    pub n_layers: usize,
    pub n_tokens: usize,
    pub dim: usize,
    pub token_spans: Vec<TokenSpan>,
    /// `n_layers * n_tokens * dim` values, layer-major then token-major.
    pub layers: Vec<f64>,
    pub pooled: Vec<f64>,
}

impl EmbeddingRecord {
    /// The `n_tokens x dim` row-major slice of stored layer `l`.
    pub fn layer(&self, l: usize) -> &[f64] {
        let stride = self.n_tokens * self.dim;
        &self.layers[l * stride..(l + 1) * stride]
    }

    fn invalid(&self, reason: impl Into<String>) -> Error {
        Error::InvalidRecord {
            sample_id: self.sample_id.clone(),
            side: self.side.as_u8(),
            reason: reason.into(),
        }
    }

    /// Checks shape, span and finiteness invariants. Finiteness is checked
    /// at `f32` precision, the precision the values are stored at.
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(self.invalid("dim must be positive"));
        }
        let expected = self.n_layers * self.n_tokens * self.dim;
        if self.layers.len() != expected {
            return Err(self.invalid(format!(
                "layers hold {} values, expected {expected}",
                self.layers.len()
            )));
        }
        if self.pooled.len() != self.dim {
            return Err(self.invalid(format!(
                "pooled holds {} values, expected {}",
                self.pooled.len(),
                self.dim
            )));
        }
        if self.token_spans.len() != self.n_tokens {
            return Err(self.invalid(format!(
                "{} token spans for {} tokens",
                self.token_spans.len(),
                self.n_tokens
            )));
        }
        if let Some((s, e)) = self
            .token_spans
            .iter()
            .find(|&&(s, e)| s >= e && (s, e) != (0, 0))
        {
            return Err(self.invalid(format!("token span ({s}, {e}) is empty")));
        }
        let finite = self
            .layers
            .iter()
            .chain(&self.pooled)
            .all(|v| (*v as f32).is_finite());
        if !finite {
            return Err(Error::NonFinite {
                sample_id: self.sample_id.clone(),
                side: self.side.as_u8(),
            });
        }
        Ok(())
    }

    fn value_count(&self) -> usize {
        self.n_layers * self.n_tokens * self.dim + self.dim
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingIndexEntry {
    pub sample_id: String,
    pub side: Side,
    pub model_id: String,
    pub n_layers: usize,
    pub n_tokens: usize,
    pub dim: usize,
    pub token_spans: Vec<TokenSpan>,
    pub blob_offset: u64,
    pub blob_length: u64,
}

impl EmbeddingIndexEntry {
    fn expected_length(&self) -> Option<u64> {
        let values = (self.n_layers as u64)
            .checked_mul(self.n_tokens as u64)?
            .checked_mul(self.dim as u64)?
            .checked_add(self.dim as u64)?;
        values.checked_mul(4)
    }
}

/// Writes records to an index and a blob stream under the given header format.
pub fn write_dump<I: Write, B: Write>(
    format: DumpFormat,
    records: &[EmbeddingRecord],
    mut index: I,
    mut blob: B,
) -> Result<()> {
    let mut keys = HashSet::with_capacity(records.len());
    for r in records {
        r.validate()?;
        if !keys.insert((r.sample_id.as_str(), r.side)) {
            return Err(Error::DuplicateKey {
                sample_id: r.sample_id.clone(),
                side: r.side.as_u8(),
            });
        }
    }

    serde_json::to_writer(
        &mut index,
        &DumpHeader {
            format,
            version: FORMAT_VERSION,
        },
    )?;
    index.write_all(b"\n")?;

    let mut offset = 0u64;
    let mut buf = Vec::new();
    for r in records {
        buf.clear();
        buf.reserve(4 * r.value_count());
        for v in r.layers.iter().chain(&r.pooled) {
            buf.extend_from_slice(&(*v as f32).to_le_bytes());
        }
        blob.write_all(&buf)?;
        let entry = EmbeddingIndexEntry {
            sample_id: r.sample_id.clone(),
            side: r.side,
            model_id: r.model_id.clone(),
            n_layers: r.n_layers,
            n_tokens: r.n_tokens,
            dim: r.dim,
            token_spans: r.token_spans.clone(),
            blob_offset: offset,
            blob_length: buf.len() as u64,
        };
        offset += buf.len() as u64;
        serde_json::to_writer(&mut index, &entry)?;
        index.write_all(b"\n")?;
    }
    index.flush()?;
    blob.flush()?;
    Ok(())
}

/// Writes an `emb-dump` to `index_path` / `blob_path`. Invalid input is
/// rejected before either file is created.
pub fn write_records(
    records: &[EmbeddingRecord],
    index_path: impl AsRef<Path>,
    blob_path: impl AsRef<Path>,
) -> Result<()> {
    write_dump_files(DumpFormat::Embeddings, records, index_path, blob_path)
}

pub(crate) fn write_dump_files(
    format: DumpFormat,
    records: &[EmbeddingRecord],
    index_path: impl AsRef<Path>,
    blob_path: impl AsRef<Path>,
) -> Result<()> {
    for r in records {
        r.validate()?;
    }
    let index = BufWriter::new(File::create(index_path)?);
    let blob = BufWriter::new(File::create(blob_path)?);
    write_dump(format, records, index, blob)
}

/// Random-access reader over a loaded index and an open blob.
///
/// The index is held in memory; the blob is read on demand under a lock, so a
/// store can be shared between threads.
pub struct EmbeddingStore<B = File> {
    header: DumpHeader,
    entries: Vec<EmbeddingIndexEntry>,
    by_key: HashMap<(String, Side), usize>,
    blob: Mutex<B>,
    blob_len: u64,
}

impl<B> fmt::Debug for EmbeddingStore<B> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EmbeddingStore")
            .field("header", &self.header)
            .field("entries", &self.entries.len())
            .field("blob_len", &self.blob_len)
            .finish()
    }
}

impl EmbeddingStore<File> {
    pub fn open(index_path: impl AsRef<Path>, blob_path: impl AsRef<Path>) -> Result<Self> {
        let index = BufReader::new(File::open(index_path)?);
        let blob = File::open(blob_path)?;
        Self::from_parts(index, blob)
    }
}

impl<B: Read + Seek> EmbeddingStore<B> {
    pub fn from_parts<I: BufRead>(index: I, mut blob: B) -> Result<Self> {
        let mut lines = index.lines().enumerate();
        let header: DumpHeader = loop {
            match lines.next() {
                Some((_, line)) => {
                    let line = line?;
                    if line.trim().is_empty() {
                        continue;
                    }
                    break serde_json::from_str(&line).map_err(|e| {
                        Error::CorruptIndex(format!("bad header line: {e}"))
                    })?;
                }
                None => return Err(Error::CorruptIndex("missing header line".into())),
            }
        };
        if header.version != FORMAT_VERSION {
            return Err(Error::CorruptIndex(format!(
                "unsupported version {}",
                header.version
            )));
        }

        let mut entries = Vec::new();
        let mut by_key = HashMap::new();
        for (i, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: EmbeddingIndexEntry = serde_json::from_str(&line)
                .map_err(|e| Error::CorruptIndex(format!("line {}: {e}", i + 1)))?;
            if entry.token_spans.len() != entry.n_tokens {
                return Err(Error::CorruptIndex(format!(
                    "line {}: {} token spans for {} tokens",
                    i + 1,
                    entry.token_spans.len(),
                    entry.n_tokens
                )));
            }
            if entry.expected_length() != Some(entry.blob_length) {
                return Err(Error::CorruptIndex(format!(
                    "line {}: blob_length {} does not match 4*(L*T*D+D) for L={}, T={}, D={}",
                    i + 1,
                    entry.blob_length,
                    entry.n_layers,
                    entry.n_tokens,
                    entry.dim
                )));
            }
            let key = (entry.sample_id.clone(), entry.side);
            if by_key.insert(key, entries.len()).is_some() {
                return Err(Error::DuplicateKey {
                    sample_id: entry.sample_id,
                    side: entry.side.as_u8(),
                });
            }
            entries.push(entry);
        }

        let mut spans: Vec<(u64, u64)> = entries
            .iter()
            .map(|e| (e.blob_offset, e.blob_offset.saturating_add(e.blob_length)))
            .collect();
        spans.sort_unstable();
        if spans.windows(2).any(|w| w[1].0 < w[0].1) {
            return Err(Error::CorruptIndex("overlapping blob ranges".into()));
        }

        let blob_len = blob.seek(SeekFrom::End(0))?;
        Ok(Self {
            header,
            entries,
            by_key,
            blob: Mutex::new(blob),
            blob_len,
        })
    }

    pub fn header(&self) -> DumpHeader {
        self.header
    }

    pub fn entries(&self) -> &[EmbeddingIndexEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, sample_id: &str, side: Side) -> bool {
        self.by_key.contains_key(&(sample_id.to_string(), side))
    }

    pub fn entry(&self, sample_id: &str, side: Side) -> Result<&EmbeddingIndexEntry> {
        self.by_key
            .get(&(sample_id.to_string(), side))
            .map(|&i| &self.entries[i])
            .ok_or_else(|| Error::NotFound {
                sample_id: sample_id.to_string(),
                side: side.as_u8(),
            })
    }

    pub fn read_record(&self, sample_id: &str, side: Side) -> Result<EmbeddingRecord> {
        let entry = self.entry(sample_id, side)?;
        let end = entry
            .blob_offset
            .checked_add(entry.blob_length)
            .ok_or_else(|| Error::CorruptIndex("blob range overflows".into()))?;
        if end > self.blob_len {
            return Err(Error::TruncatedBlob {
                needed: end,
                available: self.blob_len,
            });
        }
        let mut bytes = vec![0u8; entry.blob_length as usize];
        {
            let mut blob = self.blob.lock().unwrap_or_else(|p| p.into_inner());
            blob.seek(SeekFrom::Start(entry.blob_offset))?;
            blob.read_exact(&mut bytes)?;
        }
        let mut values: Vec<f64> = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        let pooled = values.split_off(values.len() - entry.dim);
        Ok(EmbeddingRecord {
            sample_id: entry.sample_id.clone(),
            side: entry.side,
            model_id: entry.model_id.clone(),
            n_layers: entry.n_layers,
            n_tokens: entry.n_tokens,
            dim: entry.dim,
            token_spans: entry.token_spans.clone(),
            layers: values,
            pooled,
        })
    }
}
