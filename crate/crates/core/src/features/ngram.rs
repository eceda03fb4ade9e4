use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::FeatureError;

/// Term multiset in first-occurrence order.
pub type TermCounts = IndexMap<String, usize>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NgramUnit {
    Word,
    Char,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NgramConfig {
    pub unit: NgramUnit,
    pub n_min: usize,
    pub n_max: usize,
    #[serde(default = "default_min_df")]
    pub min_df: usize,
}

fn default_min_df() -> usize {
    1
}

impl NgramConfig {
    /// Word unigrams, `W[1-1]`.
    pub fn word_unigrams() -> Self {
        NgramConfig {
            unit: NgramUnit::Word,
            n_min: 1,
            n_max: 1,
            min_df: 1,
        }
    }

    /// Character 1- to 6-grams, `C[1-6]`.
    pub fn char_1_to_6() -> Self {
        NgramConfig {
            unit: NgramUnit::Char,
            n_min: 1,
            n_max: 6,
            min_df: 1,
        }
    }

    pub fn with_range(mut self, n_min: usize, n_max: usize) -> Self {
        self.n_min = n_min;
        self.n_max = n_max;
        self
    }

    pub fn with_min_df(mut self, min_df: usize) -> Self {
        self.min_df = min_df;
        self
    }

    pub fn validate(&self) -> Result<(), FeatureError> {
        if self.n_min == 0 || self.n_min > self.n_max {
            return Err(FeatureError::InvalidConfig(format!(
                "n-gram range [{}, {}] must satisfy 1 <= n_min <= n_max",
                self.n_min, self.n_max
            )));
        }
        if self.min_df == 0 {
            return Err(FeatureError::InvalidConfig("min_df must be at least 1".into()));
        }
        Ok(())
    }
}

/// What to slide the n-gram window over.
#[derive(Debug, Clone, Copy)]
pub enum NgramSource<'a> {
    /// Character mode slides over the string as given; word mode splits it
    /// on whitespace.
    Text(&'a str),
    /// Word mode uses the tokens directly; character mode joins them with
    /// single spaces.
    Tokens(&'a [String]),
}

pub fn extract_ngrams(source: NgramSource<'_>, config: &NgramConfig) -> TermCounts {
    match (config.unit, source) {
        (NgramUnit::Char, NgramSource::Text(text)) => char_ngrams(text, config.n_min, config.n_max),
        (NgramUnit::Char, NgramSource::Tokens(tokens)) => {
            char_ngrams(&tokens.join(" "), config.n_min, config.n_max)
        }
        (NgramUnit::Word, NgramSource::Tokens(tokens)) => {
            word_ngrams(tokens, config.n_min, config.n_max)
        }
        (NgramUnit::Word, NgramSource::Text(text)) => {
            let tokens: Vec<&str> = text.split_whitespace().collect();
            word_ngrams(&tokens, config.n_min, config.n_max)
        }
    }
}

/// Character n-grams over Unicode scalar values, spaces included.
pub fn char_ngrams(text: &str, n_min: usize, n_max: usize) -> TermCounts {
    let boundaries: Vec<usize> = text
        .char_indices()
        .map(|(i, _)| i)
        .chain(std::iter::once(text.len()))
        .collect();
    let n_chars = boundaries.len() - 1;
    let mut counts = TermCounts::new();
    // position-major so first-occurrence order follows the text
    for start in 0..n_chars {
        for n in n_min..=n_max {
            let end = start + n;
            if end > n_chars {
                break;
            }
            *counts
                .entry(text[boundaries[start]..boundaries[end]].to_string())
                .or_insert(0) += 1;
        }
    }
    counts
}

/// Word n-grams, joined with a single space.
pub fn word_ngrams<S: AsRef<str>>(tokens: &[S], n_min: usize, n_max: usize) -> TermCounts {
    let mut counts = TermCounts::new();
    for start in 0..tokens.len() {
        for n in n_min..=n_max {
            let end = start + n;
            if end > tokens.len() {
                break;
            }
            let term = tokens[start..end]
                .iter()
                .map(AsRef::as_ref)
                .collect::<Vec<_>>()
                .join(" ");
            *counts.entry(term).or_insert(0) += 1;
        }
    }
    counts
}
