//! Synthetic bilingual emotion data written to a temporary directory.
//!
//! Every emotion has a cue word in each language; an example's text mixes
//! the cues of its labels with filler words, so the labels are learnable
//! from words or characters.

#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use emoxling_core::corpus::{Dataset, Example, Split};
use emoxling_core::{LabelVector, NUM_LABELS};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const EN_CUES: [&str; NUM_LABELS] = [
    "furious", "awaiting", "gross", "scared", "delighted", "adore", "hopeful", "doomed", "crying",
    "shocked", "reliable",
];
pub const AR_CUES: [&str; NUM_LABELS] = [
    "غاضب", "منتظر", "مقرف", "خائف", "سعيد", "أحب", "متفائل", "يائس", "حزين", "مندهش", "ثقة",
];
const EN_FILLER: [&str; 8] = ["the", "today", "really", "people", "this", "so", "with", "game"];
const AR_FILLER: [&str; 8] = ["في", "اليوم", "جدا", "الناس", "هذا", "مع", "كل", "مباراة"];

pub const SENTENCE_DIM: usize = 16;

pub struct Fixture {
    pub dir: tempfile::TempDir,
}

pub fn random_labels(rng: &mut ChaCha8Rng) -> LabelVector {
    let mut v = LabelVector::empty();
    let n = rng.random_range(1..=3);
    while v.count() < n {
        v.set_index(rng.random_range(0..NUM_LABELS), true);
    }
    v
}

pub fn sentence(rng: &mut ChaCha8Rng, labels: &LabelVector, arabic: bool) -> String {
    let (cues, filler) = if arabic { (&AR_CUES, &AR_FILLER) } else { (&EN_CUES, &EN_FILLER) };
    let mut words: Vec<&str> = (0..rng.random_range(2..5)).map(|_| *filler.choose(rng).unwrap()).collect();
    for k in 0..NUM_LABELS {
        if labels.get_index(k) {
            let at = rng.random_range(0..=words.len());
            words.insert(at, cues[k]);
        }
    }
    words.join(" ")
}

pub fn dataset(rng: &mut ChaCha8Rng, prefix: &str, n: usize, arabic: bool, language: &str) -> Dataset {
    let examples = (0..n)
        .map(|i| {
            let labels = random_labels(rng);
            Example::new(format!("{prefix}{i:04}"), sentence(rng, &labels, arabic), Some(labels))
        })
        .collect();
    Dataset::new(language, Split::Train, examples).unwrap()
}

/// Label-dependent sentence vector with noise.
pub fn sentence_vector(rng: &mut ChaCha8Rng, labels: &LabelVector) -> Vec<f64> {
    (0..SENTENCE_DIM)
        .map(|d| {
            let signal = if d < NUM_LABELS && labels.get_index(d) { 1.0 } else { 0.0 };
            signal + rng.random_range(-0.15..0.15)
        })
        .collect()
}

fn embedding_file(rows: &[(String, Vec<f64>)]) -> String {
    let dim = rows.first().map(|r| r.1.len()).unwrap_or(0);
    let mut out = format!("{} {}\n", rows.len(), dim);
    for (key, v) in rows {
        let vals: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
        let _ = writeln!(out, "{key} {}", vals.join(" "));
    }
    out
}

impl Fixture {
    /// Writes `train.tsv`, `dev.tsv`, `test.tsv` (Arabic-like),
    /// `translated.tsv`, `source_train.tsv` (English), `parallel.tsv`,
    /// `sentence_embeddings.txt` and `word_embeddings.txt`.
    pub fn new(seed: u64, n_train: usize) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let train = dataset(&mut rng, "tr", n_train, true, "ar");
        let dev = dataset(&mut rng, "dv", n_train / 4 + 1, true, "ar");
        let test = dataset(&mut rng, "te", n_train / 2 + 1, true, "ar");
        let translated = dataset(&mut rng, "mt", n_train, true, "ar");
        let source = dataset(&mut rng, "en", n_train, false, "en");

        let mut parallel = String::from("pair_id\tsource_text\ttarget_text\n");
        for i in 0..n_train {
            let labels = random_labels(&mut rng);
            let _ = writeln!(
                parallel,
                "pp{i:04}\t{}\t{}",
                sentence(&mut rng, &labels, false),
                sentence(&mut rng, &labels, true)
            );
        }

        let mut sentence_rows = Vec::new();
        for d in [&train, &dev, &test, &translated, &source] {
            for ex in d.iter() {
                sentence_rows.push((ex.id.clone(), sentence_vector(&mut rng, &ex.labels.unwrap())));
            }
        }
        let mut word_rows = Vec::new();
        for (k, (en, ar)) in EN_CUES.iter().zip(AR_CUES.iter()).enumerate() {
            let v: Vec<f64> = (0..NUM_LABELS).map(|d| if d == k { 1.0 } else { 0.0 }).collect();
            word_rows.push((en.to_string(), v.clone()));
            word_rows.push((ar.to_string(), v));
        }

        let p = dir.path();
        std::fs::write(p.join("train.tsv"), train.to_tsv()).unwrap();
        std::fs::write(p.join("dev.tsv"), dev.to_tsv()).unwrap();
        std::fs::write(p.join("test.tsv"), test.to_tsv()).unwrap();
        std::fs::write(p.join("translated.tsv"), translated.to_tsv()).unwrap();
        std::fs::write(p.join("source_train.tsv"), source.to_tsv()).unwrap();
        std::fs::write(p.join("parallel.tsv"), parallel).unwrap();
        std::fs::write(p.join("sentence_embeddings.txt"), embedding_file(&sentence_rows)).unwrap();
        std::fs::write(p.join("word_embeddings.txt"), embedding_file(&word_rows)).unwrap();
        Fixture { dir }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    pub fn root(&self) -> &Path {
        self.dir.path()
    }

    pub fn write(&self, name: &str, content: &str) -> PathBuf {
        let p = self.path(name);
        std::fs::write(&p, content).unwrap();
        p
    }
}
