#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempowic_core::dataset::{write_pairs, PairRecord, TweetDate, TweetInstance};
use tempowic_core::embstore::{write_records, EmbeddingRecord, Side};
use tempowic_cli::RunConfig;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

pub fn fixture_config() -> RunConfig {
    let f = fixtures();
    RunConfig {
        pairs: Some(f.join("pairs.jsonl")),
        labels: Some(f.join("labels.tsv")),
        emb_index: Some(f.join("dump.index.jsonl")),
        emb_blob: Some(f.join("dump.blob")),
        route: Some(f.join("route.json")),
        ..Default::default()
    }
}

pub fn tempowic<P: AsRef<std::ffi::OsStr>>(args: &[P]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tempowic"))
        .args(args)
        .output()
        .expect("binary runs")
}

/// Planted pairs written as a pairs file, a labels file and an embedding dump
/// whose target features equal the given vectors exactly (up to f32).
pub struct PlantedSet {
    pub pairs: PathBuf,
    pub labels: PathBuf,
}

/// `(first feature, second feature, same)`.
pub type PlantedRow = (Vec<f64>, Vec<f64>, bool);

/// Writes one dump holding every split plus a pairs / labels file per split.
/// Each feature vector of length `2 * d` is stored as a target token carrying
/// the first half in four layers and a pooled vector carrying the second.
pub fn write_planted(dir: &Path, splits: &[(&str, &[PlantedRow])]) -> (PathBuf, PathBuf, Vec<PlantedSet>) {
    let mut dump = Vec::new();
    let mut sets = Vec::new();
    for (name, rows) in splits {
        let mut records = Vec::new();
        let mut labels = String::new();
        for (i, (u, v, same)) in rows.iter().enumerate() {
            let id = format!("{name}-{i:04}");
            let date = TweetDate::new(2019 + (i % 2) as i32, 1 + (i % 12) as u32).unwrap();
            let text = format!("word{i} in context");
            let end = format!("word{i}").len();
            let tweet = TweetInstance::new(text, date, 0, end).unwrap();
            records.push(PairRecord {
                id: id.clone(),
                lemma: format!("word{i}"),
                first: tweet.clone(),
                second: tweet,
                label: None,
            });
            labels.push_str(&format!("{id}\t{}\n", *same as u8));
            for (side, feature) in [(Side::First, u), (Side::Second, v)] {
                let d = feature.len() / 2;
                let (word, pooled) = feature.split_at(d);
                let mut layers = Vec::new();
                for _ in 0..4 {
                    layers.extend(std::iter::repeat_n(0.25, d));
                    layers.extend_from_slice(word);
                    layers.extend(std::iter::repeat_n(-0.5, d));
                }
                dump.push(EmbeddingRecord {
                    sample_id: id.clone(),
                    side,
                    model_id: "planted".into(),
                    n_layers: 4,
                    n_tokens: 3,
                    dim: d,
                    token_spans: vec![(0, 0), (0, end), (0, 0)],
                    layers,
                    pooled: pooled.to_vec(),
                });
            }
        }
        let pairs = dir.join(format!("{name}.pairs.jsonl"));
        let mut buf = Vec::new();
        write_pairs(&mut buf, &records).unwrap();
        std::fs::write(&pairs, buf).unwrap();
        let labels_path = dir.join(format!("{name}.labels.tsv"));
        std::fs::write(&labels_path, labels).unwrap();
        sets.push(PlantedSet { pairs, labels: labels_path });
    }
    let index = dir.join("planted.index.jsonl");
    let blob = dir.join("planted.blob");
    write_records(&dump, &index, &blob).unwrap();
    (index, blob, sets)
}
