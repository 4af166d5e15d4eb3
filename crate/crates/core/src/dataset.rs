//! Pair datasets: parsing, gold labels, summary statistics and time routing.
//!
//! A pairs file is JSON Lines, one sample per line:
//!
//! ```text
//! {"id": "...", "word": "virus",
//!  "tweet1": {"text": "...", "date": "2019-11", "start": 10, "end": 15},
//!  "tweet2": {"text": "...", "date": "2020-03", "start": 4, "end": 9}}
//! ```
//!
//! Offsets count Unicode scalar values, not bytes. The original shared-task
//! distribution names the offsets `text_start` / `text_end` and carries token
//! lists; both spellings are accepted and the token lists are ignored.
//!
//! Gold labels are a separate headerless TSV of `id<TAB>label`, with
//! `1` meaning the target word has the same meaning in both tweets.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary gold or predicted label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Label {
    Different,
    Same,
}

impl Label {
    pub fn as_u8(self) -> u8 {
        match self {
            Label::Different => 0,
            Label::Same => 1,
        }
    }

    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(Label::Different),
            1 => Some(Label::Same),
            _ => None,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Label::Different => Label::Same,
            Label::Same => Label::Different,
        }
    }
}

impl TryFrom<u8> for Label {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        Label::from_u8(v).ok_or_else(|| format!("label must be 0 or 1, got {v}"))
    }
}

impl From<Label> for u8 {
    fn from(l: Label) -> u8 {
        l.as_u8()
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_u8())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "0" => Ok(Label::Different),
            "1" => Ok(Label::Same),
            other => Err(Error::InvalidLabel(other.to_string())),
        }
    }
}

/// Year and month a tweet was posted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TweetDate {
    pub year: i32,
    pub month: u8,
}

impl TweetDate {
    pub fn new(year: i32, month: u32) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::InvalidMonth(month));
        }
        Ok(Self {
            year,
            month: month as u8,
        })
    }
}

impl FromStr for TweetDate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::BadDate(s.to_string());
        let (y, m) = s.split_once('-').ok_or_else(bad)?;
        if y.len() != 4 || m.is_empty() || m.len() > 2 {
            return Err(bad());
        }
        if !y.bytes().all(|b| b.is_ascii_digit()) || !m.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let year: i32 = y.parse().map_err(|_| bad())?;
        let month: u32 = m.parse().map_err(|_| bad())?;
        TweetDate::new(year, month)
    }
}

impl fmt::Display for TweetDate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

/// One dated tweet with the character span of its target word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TweetInstance {
    pub text: String,
    pub date: TweetDate,
    /// Inclusive start, in chars.
    pub span_start: usize,
    /// Exclusive end, in chars.
    pub span_end: usize,
}

impl TweetInstance {
    pub fn new(text: String, date: TweetDate, span_start: usize, span_end: usize) -> Result<Self> {
        let len = text.chars().count();
        if span_start >= span_end || span_end > len {
            return Err(Error::InvalidSpan {
                start: span_start,
                end: span_end,
                len,
            });
        }
        Ok(Self {
            text,
            date,
            span_start,
            span_end,
        })
    }

    pub fn span(&self) -> (usize, usize) {
        (self.span_start, self.span_end)
    }

    /// The surface form of the target word in this tweet.
    pub fn target(&self) -> String {
        self.text
            .chars()
            .skip(self.span_start)
            .take(self.span_end - self.span_start)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairRecord {
    pub id: String,
    pub lemma: String,
    pub first: TweetInstance,
    pub second: TweetInstance,
    pub label: Option<Label>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawTweet {
    text: String,
    date: String,
    #[serde(alias = "text_start")]
    start: usize,
    #[serde(alias = "text_end")]
    end: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawPair {
    id: String,
    word: String,
    tweet1: RawTweet,
    tweet2: RawTweet,
}

impl RawTweet {
    fn into_instance(self) -> Result<TweetInstance> {
        let date: TweetDate = self.date.parse()?;
        TweetInstance::new(self.text, date, self.start, self.end)
    }

    fn from_instance(t: &TweetInstance) -> Self {
        Self {
            text: t.text.clone(),
            date: t.date.to_string(),
            start: t.span_start,
            end: t.span_end,
        }
    }
}

/// Parses a JSON Lines pairs stream. Blank lines are skipped; errors carry the
/// 1-based line number.
pub fn parse_pairs<R: BufRead>(reader: R) -> Result<Vec<PairRecord>> {
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = parse_pair_line(&line).map_err(|e| Error::at_line(lineno, e))?;
        if !seen.insert(record.id.clone()) {
            return Err(Error::at_line(lineno, Error::DuplicateId(record.id)));
        }
        records.push(record);
    }
    Ok(records)
}

fn parse_pair_line(line: &str) -> Result<PairRecord> {
    let raw: RawPair = serde_json::from_str(line)?;
    Ok(PairRecord {
        id: raw.id,
        lemma: raw.word,
        first: raw.tweet1.into_instance()?,
        second: raw.tweet2.into_instance()?,
        label: None,
    })
}

/// Writes records in the pairs-file schema. Labels are not part of the schema.
pub fn write_pairs<W: Write>(mut writer: W, records: &[PairRecord]) -> Result<()> {
    for r in records {
        let raw = RawPair {
            id: r.id.clone(),
            word: r.lemma.clone(),
            tweet1: RawTweet::from_instance(&r.first),
            tweet2: RawTweet::from_instance(&r.second),
        };
        serde_json::to_writer(&mut writer, &raw)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// Parses a headerless `id<TAB>label` stream into (id, label) pairs in file
/// order. Further tab-separated columns are ignored.
pub fn parse_labels<R: BufRead>(reader: R) -> Result<Vec<(String, Label)>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut cols = line.split('\t');
        let id = cols.next().unwrap_or_default().trim();
        let label = cols
            .next()
            .ok_or_else(|| Error::at_line(i + 1, Error::InvalidLabel(String::new())))?;
        let label: Label = label.parse().map_err(|e| Error::at_line(i + 1, e))?;
        out.push((id.to_string(), label));
    }
    Ok(out)
}

/// Outcome of [`attach_labels`].
#[derive(Debug, Clone)]
pub struct Labeled {
    pub records: Vec<PairRecord>,
    /// Label ids that matched no record.
    pub unknown_ids: Vec<String>,
}

/// Attaches gold labels by id. Unknown label ids are reported as warnings;
/// a repeated label id is an error.
pub fn attach_labels(mut records: Vec<PairRecord>, labels: &[(String, Label)]) -> Result<Labeled> {
    let mut map: HashMap<&str, Label> = HashMap::with_capacity(labels.len());
    for (id, label) in labels {
        if map.insert(id.as_str(), *label).is_some() {
            return Err(Error::DuplicateLabel(id.clone()));
        }
    }
    let known: HashSet<&str> = records.iter().map(|r| r.id.as_str()).collect();
    let unknown_ids: Vec<String> = labels
        .iter()
        .filter(|(id, _)| !known.contains(id.as_str()))
        .map(|(id, _)| id.clone())
        .collect();
    for id in &unknown_ids {
        log::warn!("label id {id:?} does not match any record");
    }
    for r in records.iter_mut() {
        if let Some(&label) = map.get(r.id.as_str()) {
            r.label = Some(label);
        }
    }
    Ok(Labeled {
        records,
        unknown_ids,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub n_records: usize,
    pub n_same: usize,
    pub n_different: usize,
    pub n_unlabeled: usize,
    pub years_seen: BTreeSet<i32>,
    pub lemma_vocabulary: BTreeSet<String>,
}

pub fn compute_stats(records: &[PairRecord]) -> DatasetStats {
    let mut stats = DatasetStats::default();
    for r in records {
        stats.n_records += 1;
        match r.label {
            Some(Label::Same) => stats.n_same += 1,
            Some(Label::Different) => stats.n_different += 1,
            None => stats.n_unlabeled += 1,
        }
        stats.years_seen.insert(r.first.date.year);
        stats.years_seen.insert(r.second.date.year);
        stats.lemma_vocabulary.insert(r.lemma.clone());
    }
    stats
}

/// Maps a cutoff year to the encoder trained on data up to that year.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelRoute {
    cutoffs: BTreeMap<i32, String>,
}

impl ModelRoute {
    pub fn new(cutoffs: BTreeMap<i32, String>) -> Result<Self> {
        if cutoffs.is_empty() {
            return Err(Error::InvalidRoute("route has no entries".into()));
        }
        if let Some((year, _)) = cutoffs.iter().find(|(_, id)| id.trim().is_empty()) {
            return Err(Error::InvalidRoute(format!("empty model id for year {year}")));
        }
        Ok(Self { cutoffs })
    }

    /// A route sending every date to one model.
    pub fn single(model_id: impl Into<String>) -> Result<Self> {
        Self::new(BTreeMap::from([(0, model_id.into())]))
    }

    /// Parses the route file: a JSON object from year strings to model ids.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: BTreeMap<String, String> = serde_json::from_str(text)?;
        let mut cutoffs = BTreeMap::new();
        for (k, v) in raw {
            let year: i32 = k
                .trim()
                .parse()
                .map_err(|_| Error::InvalidRoute(format!("year key {k:?} is not an integer")))?;
            cutoffs.insert(year, v);
        }
        Self::new(cutoffs)
    }

    pub fn cutoffs(&self) -> &BTreeMap<i32, String> {
        &self.cutoffs
    }

    /// Picks the model for a tweet date: the exact year if routed, otherwise
    /// the latest earlier cutoff, otherwise the earliest cutoff.
    pub fn route(&self, date: TweetDate) -> &str {
        if let Some((_, id)) = self.cutoffs.range(..=date.year).next_back() {
            return id;
        }
        self.cutoffs
            .values()
            .next()
            .expect("route is non-empty by construction")
    }
}

pub fn route_model(date: TweetDate, route: &ModelRoute) -> &str {
    route.route(date)
}
