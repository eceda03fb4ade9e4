//! Label transfer across a parallel corpus: source-side decisions are
//! copied onto the target text when enough emotions were predicted.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{CorpusError, Dataset, Example, ParallelPair, PredictionMatrix, Split};
use crate::labels::{LabelVector, NUM_LABELS};

#[derive(Debug, Error)]
pub enum ProjectionError {
    #[error("no source prediction for pair `{0}`")]
    IdMismatch(String),
    #[error("invalid projection configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// count >= min
    #[default]
    AtLeast,
    /// count > min
    MoreThan,
}

impl Comparison {
    pub fn accepts(self, count: usize, min: usize) -> bool {
        match self {
            Comparison::AtLeast => count >= min,
            Comparison::MoreThan => count > min,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Comparison::AtLeast => "at_least",
            Comparison::MoreThan => "more_than",
        }
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Comparison {
    type Err = ProjectionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().replace('-', "_").to_ascii_lowercase().as_str() {
            "at_least" => Ok(Comparison::AtLeast),
            "more_than" => Ok(Comparison::MoreThan),
            other => Err(ProjectionError::InvalidConfig(format!("unknown comparison `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProjectionConfig {
    pub min_emotions: usize,
    pub comparison: Comparison,
    /// Source probabilities above this count as predicted.
    pub source_threshold: f64,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        ProjectionConfig {
            min_emotions: 3,
            comparison: Comparison::AtLeast,
            source_threshold: 0.5,
        }
    }
}

impl ProjectionConfig {
    pub fn validate(&self) -> Result<(), ProjectionError> {
        if self.min_emotions > NUM_LABELS {
            return Err(ProjectionError::InvalidConfig(format!(
                "min_emotions must be at most {NUM_LABELS}, got {}",
                self.min_emotions
            )));
        }
        if !(0.0..=1.0).contains(&self.source_threshold) {
            return Err(ProjectionError::InvalidConfig(format!(
                "source_threshold must lie in [0, 1], got {}",
                self.source_threshold
            )));
        }
        Ok(())
    }

    pub fn accepts(&self, labels: &LabelVector) -> bool {
        self.comparison.accepts(labels.count(), self.min_emotions)
    }
}

/// Source decisions for every pair, in pair order.
fn source_labels(
    pairs: &[ParallelPair],
    source_preds: &PredictionMatrix,
    config: &ProjectionConfig,
) -> Result<Vec<LabelVector>, ProjectionError> {
    config.validate()?;
    let preds = source_preds.with_threshold(config.source_threshold)?;
    pairs
        .par_iter()
        .map(|pair| {
            preds
                .decision_for(&pair.pair_id)
                .ok_or_else(|| ProjectionError::IdMismatch(pair.pair_id.clone()))
        })
        .collect()
}

/// Keeps pairs whose source side passes the emotion-count filter and
/// labels their target text with the source decisions.
pub fn project_labels(
    pairs: &[ParallelPair],
    source_preds: &PredictionMatrix,
    config: &ProjectionConfig,
    target_language: &str,
) -> Result<Dataset, ProjectionError> {
    let labels = source_labels(pairs, source_preds, config)?;
    let examples = pairs
        .iter()
        .zip(labels)
        .filter(|(_, l)| config.accepts(l))
        .map(|(pair, l)| Example::new(pair.pair_id.clone(), pair.target_text.clone(), Some(l)))
        .collect();
    Ok(Dataset::new(target_language, Split::Projected, examples)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterReport {
    /// `histogram[c]` pairs had exactly `c` predicted emotions.
    pub histogram: [usize; NUM_LABELS + 1],
    pub total: usize,
    pub retained: usize,
    pub config: ProjectionConfig,
}

impl FilterReport {
    pub fn retention_rate(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.retained as f64 / self.total as f64
        }
    }

    /// Count another filter would keep, read off the histogram.
    pub fn retained_at(&self, min_emotions: usize, comparison: Comparison) -> usize {
        self.histogram
            .iter()
            .enumerate()
            .filter(|(c, _)| comparison.accepts(*c, min_emotions))
            .map(|(_, n)| n)
            .sum()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "filter: {} {} (source threshold {})",
            self.config.comparison, self.config.min_emotions, self.config.source_threshold
        );
        let _ = writeln!(out, "emotions\tpairs");
        for (c, n) in self.histogram.iter().enumerate() {
            let _ = writeln!(out, "{c}\t{n}");
        }
        let _ = writeln!(out, "total\t{}", self.total);
        let _ = writeln!(out, "retained\t{}", self.retained);
        let _ = writeln!(out, "retention\t{:.4}", self.retention_rate());
        out
    }
}

pub fn filter_report(
    pairs: &[ParallelPair],
    source_preds: &PredictionMatrix,
    config: &ProjectionConfig,
) -> Result<FilterReport, ProjectionError> {
    let labels = source_labels(pairs, source_preds, config)?;
    let mut histogram = [0usize; NUM_LABELS + 1];
    let mut retained = 0;
    for l in &labels {
        histogram[l.count()] += 1;
        if config.accepts(l) {
            retained += 1;
        }
    }
    Ok(FilterReport {
        histogram,
        total: pairs.len(),
        retained,
        config: config.clone(),
    })
}
