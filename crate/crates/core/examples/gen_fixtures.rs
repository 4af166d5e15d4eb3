//! Regenerates the test fixtures under `tests/fixtures/`.
//!
//! ```text
//! cargo run -p tempowic-core --example gen_fixtures
//! ```
//!
//! Target words get one planted vector per sense, so SAME pairs produce
//! nearly parallel features and DIFFERENT pairs do not.

use std::collections::BTreeSet;
use std::fs;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempowic_core::dataset::{write_pairs, ModelRoute, PairRecord, TweetDate, TweetInstance};
use tempowic_core::embstore::{write_records, EmbeddingRecord, Side};

const LAYERS: usize = 5;
const DIM: usize = 4;

// (word, text1, date1, sense1, text2, date2, sense2)
const ROWS: &[(&str, &str, &str, u8, &str, &str, u8)] = &[
    ("virus", "this virus is spreading fast", "2019-12", 0, "the virus closed every school", "2020-03", 0),
    ("virus", "my laptop caught a virus again", "2019-06", 1, "a new virus hit the hospital", "2020-02", 0),
    ("lockdown", "stadium lockdown after the alarm", "2019-08", 1, "lockdown day forty baking bread", "2020-05", 0),
    ("lockdown", "second lockdown starts monday", "2020-10", 0, "national lockdown extended again", "2020-11", 0),
    ("mask", "wear a mask on the train", "2020-07", 0, "masks are required indoors now", "2020-08", 0),
    ("mask", "halloween mask shopping tonight", "2019-10", 1, "surgical mask shortages everywhere", "2020-03", 0),
    ("stream", "join my stream at eight tonight", "2020-01", 0, "the stream was laggy but fun", "2020-04", 0),
    ("stream", "fishing by the stream all morning", "2019-07", 1, "watch the stream on twitch", "2020-06", 0),
    ("cloud", "storage moved to the cloud finally", "2019-09", 0, "cloud outage took down our app", "2020-09", 0),
    ("cloud", "one dark cloud over the beach", "2019-05", 1, "cloud billing is out of control", "2021-02", 0),
    ("zoom", "zoom call with grandma later", "2020-04", 0, "another zoom meeting that could be email", "2020-12", 0),
    ("zoom", "zoom in on the photo please", "2019-03", 1, "zoom fatigue is real", "2020-06", 0),
    ("bubble", "housing bubble about to burst", "2019-11", 1, "our family bubble for christmas", "2020-12", 0),
    ("bubble", "kids blowing bubble after bubble", "2019-04", 2, "social bubble rules changed", "2020-09", 0),
    ("distancing", "distancing measures in shops", "2020-04", 0, "keep distancing in the queue", "2020-05", 0),
    ("quarantine", "quarantine snacks are gone already", "2020-03", 0, "day twelve of quarantine", "2020-04", 0),
    ("spike", "volleyball spike of the season", "2019-08", 1, "a spike in cases this week", "2020-07", 0),
    ("spike", "case spike in the north", "2020-10", 0, "new spike reported overnight", "2020-11", 0),
    ("corona", "ice cold corona on the porch", "2019-07", 1, "corona cases rising again", "2020-03", 0),
    ("corona", "solar corona photographed today", "2019-12", 2, "the corona eclipse photos", "2019-06", 2),
];

fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

/// Whitespace tokens with char offsets; words longer than six chars split
/// into two pieces.
fn tokenize(text: &str) -> Vec<(usize, usize)> {
    let chars: Vec<char> = text.chars().collect();
    let mut spans = vec![(0, 0)];
    let mut i = 0;
    while i < chars.len() {
        if chars[i] == ' ' {
            i += 1;
            continue;
        }
        let start = i;
        while i < chars.len() && chars[i] != ' ' {
            i += 1;
        }
        if i - start > 6 {
            spans.push((start, start + 4));
            spans.push((start + 4, i));
        } else {
            spans.push((start, i));
        }
    }
    spans.push((0, 0));
    spans
}

fn char_find(text: &str, word: &str) -> (usize, usize) {
    let byte = text.find(word).expect("target word present");
    let start = text[..byte].chars().count();
    (start, start + word.chars().count())
}

fn main() {
    let dir = fixtures_dir();
    fs::create_dir_all(&dir).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(20221207);
    let route = ModelRoute::from_json(r#"{"2019": "twitter-roberta-base-2019", "2020": "twitter-roberta-base-2020"}"#).unwrap();

    let mut records = Vec::new();
    let mut labels = String::new();
    let mut dump = Vec::new();
    let (mut n_same, mut n_diff) = (0, 0);
    let mut years = BTreeSet::new();
    let mut lemmas = BTreeSet::new();
    let mut sense_vectors = std::collections::HashMap::new();

    for (i, &(word, t1, d1, s1, t2, d2, s2)) in ROWS.iter().enumerate() {
        let id = format!("fx-{i:02}");
        let mut instances = Vec::new();
        for (side, text, date, sense) in [(Side::First, t1, d1, s1), (Side::Second, t2, d2, s2)] {
            let date: TweetDate = date.parse().unwrap();
            years.insert(date.year);
            let (start, end) = char_find(text, word);
            instances.push(TweetInstance::new(text.to_string(), date, start, end).unwrap());

            let sense_vec: Vec<f64> = sense_vectors
                .entry((word, sense))
                .or_insert_with(|| (0..DIM).map(|_| rng.gen_range(-1.0f64..1.0)).collect::<Vec<f64>>())
                .clone();
            let spans = tokenize(text);
            let mut layers = Vec::with_capacity(LAYERS * spans.len() * DIM);
            for l in 0..LAYERS {
                for &(s, e) in &spans {
                    let on_target = (s, e) != (0, 0) && s < end && start < e;
                    for d in 0..DIM {
                        let noise: f64 = rng.gen_range(-0.1..0.1);
                        let v = if on_target && l > 0 { sense_vec[d] + noise } else { rng.gen_range(-1.0..1.0) };
                        layers.push(((v as f32) as f64 * 1024.0).round() / 1024.0);
                    }
                }
            }
            let pooled = (0..DIM).map(|_| (rng.gen_range(-0.2f64..0.2) * 1024.0).round() / 1024.0).collect();
            dump.push(EmbeddingRecord {
                sample_id: id.clone(),
                side,
                model_id: route.route(date).to_string(),
                n_layers: LAYERS,
                n_tokens: spans.len(),
                dim: DIM,
                token_spans: spans,
                layers,
                pooled,
            });
        }
        let same = s1 == s2;
        if same { n_same += 1 } else { n_diff += 1 }
        labels.push_str(&format!("{id}\t{}\n", same as u8));
        lemmas.insert(word.to_string());
        let second = instances.pop().unwrap();
        let first = instances.pop().unwrap();
        records.push(PairRecord { id, lemma: word.to_string(), first, second, label: None });
    }

    let mut pairs = Vec::new();
    write_pairs(&mut pairs, &records).unwrap();
    fs::write(dir.join("pairs.jsonl"), pairs).unwrap();
    fs::write(dir.join("labels.tsv"), labels).unwrap();
    fs::write(dir.join("route.json"), "{\"2019\": \"twitter-roberta-base-2019\", \"2020\": \"twitter-roberta-base-2020\"}\n").unwrap();
    let manifest = serde_json::json!({
        "n_records": ROWS.len(),
        "n_same": n_same,
        "n_different": n_diff,
        "n_unlabeled": 0,
        "years_seen": years,
        "lemma_vocabulary": lemmas,
    });
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest).unwrap() + "\n").unwrap();
    write_records(&dump, dir.join("dump.index.jsonl"), dir.join("dump.blob")).unwrap();
    println!("wrote fixtures to {} ({n_same} same, {n_diff} different)", dir.display());
}
