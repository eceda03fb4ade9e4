//! Smoothed tf-idf over word or character n-grams.
//!
//! `idf(t) = ln((1 + N) / (1 + df(t))) + 1` and a document's vector holds
//! `tf(t) * idf(t)` for in-vocabulary terms, L2-normalized.

use indexmap::IndexMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ngram::{char_ngrams, word_ngrams, NgramConfig, NgramUnit, TermCounts};
use super::text::{normalize_text, tokenize, NormalizationConfig};
use super::{FeatureError, FeatureVector};
use crate::corpus::Dataset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfidfModel {
    config: NgramConfig,
    normalization: NormalizationConfig,
    /// term -> document frequency; the map position is the column index
    vocabulary: IndexMap<String, usize>,
    n_documents: usize,
}

impl TfidfModel {
    /// Fits on `texts` in order. Column order is the order in which terms
    /// first occur, restricted to terms with `df >= min_df`.
    pub fn fit<S: AsRef<str> + Sync>(
        texts: &[S],
        config: NgramConfig,
        normalization: NormalizationConfig,
    ) -> Result<Self, FeatureError> {
        config.validate()?;
        normalization.validate()?;
        if texts.is_empty() {
            return Err(FeatureError::EmptyCorpus);
        }
        // per-document extraction may run in parallel; the merge is sequential
        let per_doc: Vec<TermCounts> = texts
            .par_iter()
            .map(|t| terms_of(t.as_ref(), &config, &normalization))
            .collect();
        let mut df: IndexMap<String, usize> = IndexMap::new();
        for doc in per_doc {
            for term in doc.into_keys() {
                *df.entry(term).or_insert(0) += 1;
            }
        }
        df.retain(|_, count| *count >= config.min_df);
        Ok(TfidfModel {
            config,
            normalization,
            vocabulary: df,
            n_documents: texts.len(),
        })
    }

    pub fn config(&self) -> &NgramConfig {
        &self.config
    }

    pub fn normalization(&self) -> &NormalizationConfig {
        &self.normalization
    }

    pub fn dim(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn n_documents(&self) -> usize {
        self.n_documents
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.vocabulary.get_index_of(term)
    }

    pub fn document_frequency(&self, term: &str) -> Option<usize> {
        self.vocabulary.get(term).copied()
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.vocabulary.keys().map(String::as_str)
    }

    pub fn idf(&self, term: &str) -> Option<f64> {
        self.document_frequency(term)
            .map(|df| smoothed_idf(self.n_documents, df))
    }

    pub fn transform(&self, text: &str) -> FeatureVector {
        let counts = terms_of(text, &self.config, &self.normalization);
        let pairs = counts.iter().filter_map(|(term, &tf)| {
            self.vocabulary
                .get_full(term.as_str())
                .map(|(index, _, &df)| (index, tf as f64 * smoothed_idf(self.n_documents, df)))
        });
        FeatureVector::from_pairs(self.dim(), pairs)
            .expect("vocabulary indices are in range")
            .l2_normalized()
    }
}

pub fn smoothed_idf(n_documents: usize, df: usize) -> f64 {
    ((1.0 + n_documents as f64) / (1.0 + df as f64)).ln() + 1.0
}

fn terms_of(text: &str, config: &NgramConfig, normalization: &NormalizationConfig) -> TermCounts {
    match config.unit {
        NgramUnit::Word => word_ngrams(&tokenize(text, normalization), config.n_min, config.n_max),
        NgramUnit::Char => char_ngrams(
            &normalize_text(text, normalization),
            config.n_min,
            config.n_max,
        ),
    }
}

/// Fits a tf-idf model on the texts of `corpus`.
pub fn fit_tfidf(
    corpus: &Dataset,
    config: NgramConfig,
    normalization: NormalizationConfig,
) -> Result<TfidfModel, FeatureError> {
    let texts: Vec<&str> = corpus.texts().collect();
    TfidfModel::fit(&texts, config, normalization)
}

pub fn transform_tfidf(model: &TfidfModel, text: &str) -> FeatureVector {
    model.transform(text)
}
