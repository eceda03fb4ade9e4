//! Datasets, parallel corpora and prediction files.
//!
//! All three formats are UTF-8, tab-separated, with a header line. A leading
//! byte-order mark is stripped; `\r\n` line endings and trailing whitespace
//! are tolerated.

mod dataset;
mod parallel;
mod predictions;

use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::labels::UnknownLabel;

pub use dataset::{parse_dataset, Dataset, Example, Split};
pub use parallel::{parallel_to_tsv, parse_parallel, parse_parallel_str, ParallelPair};
pub use predictions::{format_probability, parse_predictions, PredictionMatrix, DEFAULT_THRESHOLD};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: missing column `{column}`")]
    MissingColumn { line: usize, column: String },
    #[error("line {line}: column `{column}` has label value `{value}`, expected 0 or 1")]
    MalformedLabel {
        line: usize,
        column: String,
        value: String,
    },
    #[error("line {line}: duplicate id `{id}`")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: example `{id}` has empty text")]
    EmptyText { line: usize, id: String },
    #[error("line {line}: pair `{pair_id}` has an empty {side} side")]
    EmptySide {
        line: usize,
        pair_id: String,
        side: &'static str,
    },
    #[error("line {line}: probability {value} outside [0, 1]")]
    ProbabilityOutOfRange { line: usize, value: String },
    #[error("line {line}: expected {expected} columns, found {found}")]
    RowWidthMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: cannot parse number `{value}`")]
    MalformedNumber { line: usize, value: String },
    #[error("line {line}: {source}")]
    UnknownLabel {
        line: usize,
        #[source]
        source: UnknownLabel,
    },
    #[error("dataset mixes labeled and unlabeled examples")]
    MixedLabels,
    #[error("{0}")]
    Invalid(String),
}

pub(crate) fn read_text(path: &Path) -> Result<String, CorpusError> {
    std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Splits file content into `(1-based line number, line)` pairs with the
/// BOM, line terminators and trailing whitespace removed. Blank lines are
/// skipped.
pub(crate) fn content_lines(content: &str) -> impl Iterator<Item = (usize, &str)> {
    let content = content.strip_prefix('\u{feff}').unwrap_or(content);
    content
        .lines()
        .enumerate()
        .map(|(i, line)| (i + 1, line.trim_end()))
        .filter(|(_, line)| !line.is_empty())
}
