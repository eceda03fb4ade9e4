//! Text to feature vectors: tokenization, n-gram tf-idf, embedding
//! averages and sentence-embedding lookup, combined block-wise.

mod embedding;
mod ngram;
mod pipeline;
mod text;
mod tfidf;
mod vector;

use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub use embedding::{embed_average, load_embedding_table, EmbeddingTable};
pub use ngram::{char_ngrams, extract_ngrams, word_ngrams, NgramConfig, NgramSource, NgramUnit, TermCounts};
pub use pipeline::{FeatureKind, FeaturePipeline, FeatureSettings, FittedBlock};
pub use text::{normalize_text, tokenize, NormalizationConfig};
pub use tfidf::{fit_tfidf, smoothed_idf, transform_tfidf, TfidfModel};
pub use vector::{concat_blocks, FeatureVector};

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("cannot fit on an empty corpus")]
    EmptyCorpus,
    #[error("invalid feature configuration: {0}")]
    InvalidConfig(String),
    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("non-finite feature value")]
    NonFinite,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("line {line}: expected {expected} values, found {found}")]
    DimensionMismatchAt {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("feature `{0}` needs an embedding table that was not supplied")]
    MissingTable(FeatureKind),
    #[error("no sentence embedding for example `{0}`")]
    MissingEmbedding(String),
    #[error("sentence-embedding features need an example id and cannot be computed from text alone")]
    TextOnlyUnsupported,
}
