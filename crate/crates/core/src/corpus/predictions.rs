use std::collections::HashMap;
use std::path::Path;

use super::{content_lines, read_text, CorpusError};
use crate::labels::{EmotionLabel, LabelVector, NUM_LABELS};

pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Per-example label probabilities with the decisions they imply.
///
/// `decisions[i][k]` is true iff `probabilities[i][k] > threshold`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionMatrix {
    example_ids: Vec<String>,
    probabilities: Vec<[f64; NUM_LABELS]>,
    decisions: Vec<LabelVector>,
    threshold: f64,
    index: HashMap<String, usize>,
}

impl PredictionMatrix {
    pub fn new(
        example_ids: Vec<String>,
        probabilities: Vec<[f64; NUM_LABELS]>,
        threshold: f64,
    ) -> Result<Self, CorpusError> {
        if example_ids.len() != probabilities.len() {
            return Err(CorpusError::Invalid(format!(
                "{} ids but {} probability rows",
                example_ids.len(),
                probabilities.len()
            )));
        }
        if !(0.0..=1.0).contains(&threshold) {
            return Err(CorpusError::Invalid(format!(
                "threshold {threshold} outside [0, 1]"
            )));
        }
        let mut index = HashMap::with_capacity(example_ids.len());
        for (i, id) in example_ids.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(CorpusError::DuplicateId {
                    line: i + 1,
                    id: id.clone(),
                });
            }
        }
        for (i, row) in probabilities.iter().enumerate() {
            if let Some(p) = row.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                return Err(CorpusError::ProbabilityOutOfRange {
                    line: i + 1,
                    value: p.to_string(),
                });
            }
        }
        let decisions = probabilities
            .iter()
            .map(|row| decide(row, threshold))
            .collect();
        Ok(PredictionMatrix {
            example_ids,
            probabilities,
            decisions,
            threshold,
            index,
        })
    }

    /// Same probabilities, decisions recomputed at `threshold`.
    pub fn with_threshold(&self, threshold: f64) -> Result<Self, CorpusError> {
        Self::new(self.example_ids.clone(), self.probabilities.clone(), threshold)
    }

    pub fn len(&self) -> usize {
        self.example_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.example_ids.is_empty()
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn example_ids(&self) -> &[String] {
        &self.example_ids
    }

    pub fn probabilities(&self) -> &[[f64; NUM_LABELS]] {
        &self.probabilities
    }

    pub fn decisions(&self) -> &[LabelVector] {
        &self.decisions
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn decision_for(&self, id: &str) -> Option<LabelVector> {
        self.position(id).map(|i| self.decisions[i])
    }

    pub fn probabilities_for(&self, id: &str) -> Option<&[f64; NUM_LABELS]> {
        self.position(id).map(|i| &self.probabilities[i])
    }

    /// Serialized form: a `# threshold=` comment, the header, then one row
    /// per example with every probability printed to at least six decimals
    /// and without loss of precision.
    pub fn to_tsv(&self) -> String {
        let mut out = format!("# threshold={}\nID", format_probability(self.threshold));
        for label in EmotionLabel::ALL {
            out.push('\t');
            out.push_str(label.name());
        }
        out.push('\n');
        for (id, row) in self.example_ids.iter().zip(&self.probabilities) {
            out.push_str(id);
            for p in row {
                out.push('\t');
                out.push_str(&format_probability(*p));
            }
            out.push('\n');
        }
        out
    }

    pub fn write_tsv(&self, path: &Path) -> Result<(), CorpusError> {
        std::fs::write(path, self.to_tsv()).map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn parse_str(content: &str) -> Result<Self, CorpusError> {
        let mut lines = content_lines(content).peekable();
        let mut threshold = DEFAULT_THRESHOLD;
        if let Some((line_no, line)) = lines.peek().copied() {
            if let Some(comment) = line.strip_prefix('#') {
                let value = comment
                    .trim()
                    .strip_prefix("threshold=")
                    .ok_or_else(|| {
                        CorpusError::Invalid(format!("line {line_no}: unrecognized comment"))
                    })?;
                threshold = parse_real(value.trim(), line_no)?;
                if !(0.0..=1.0).contains(&threshold) {
                    return Err(CorpusError::ProbabilityOutOfRange {
                        line: line_no,
                        value: value.trim().into(),
                    });
                }
                lines.next();
            }
        }

        let (header_line, header) = lines.next().ok_or(CorpusError::MissingColumn {
            line: 1,
            column: "ID".into(),
        })?;
        let columns: Vec<&str> = header.split('\t').map(str::trim).collect();
        if !columns.first().is_some_and(|c| c.eq_ignore_ascii_case("ID")) {
            return Err(CorpusError::MissingColumn {
                line: header_line,
                column: "ID".into(),
            });
        }
        let mut label_column = [usize::MAX; NUM_LABELS];
        for (pos, name) in columns.iter().enumerate().skip(1) {
            let label: EmotionLabel = name.parse().map_err(|source| CorpusError::UnknownLabel {
                line: header_line,
                source,
            })?;
            label_column[label.index()] = pos;
        }
        if let Some(missing) = EmotionLabel::ALL
            .iter()
            .find(|l| label_column[l.index()] == usize::MAX)
        {
            return Err(CorpusError::MissingColumn {
                line: header_line,
                column: missing.name().into(),
            });
        }
        if columns.len() != NUM_LABELS + 1 {
            return Err(CorpusError::RowWidthMismatch {
                line: header_line,
                expected: NUM_LABELS + 1,
                found: columns.len(),
            });
        }

        let mut ids = Vec::new();
        let mut rows = Vec::new();
        let mut seen = HashMap::new();
        for (line_no, line) in lines {
            let cells: Vec<&str> = line.split('\t').collect();
            if cells.len() != NUM_LABELS + 1 {
                return Err(CorpusError::RowWidthMismatch {
                    line: line_no,
                    expected: NUM_LABELS + 1,
                    found: cells.len(),
                });
            }
            let id = cells[0].trim().to_string();
            if seen.insert(id.clone(), line_no).is_some() {
                return Err(CorpusError::DuplicateId { line: line_no, id });
            }
            let mut row = [0.0; NUM_LABELS];
            for label in EmotionLabel::ALL {
                let cell = cells[label_column[label.index()]].trim();
                let p = parse_real(cell, line_no)?;
                if !(0.0..=1.0).contains(&p) {
                    return Err(CorpusError::ProbabilityOutOfRange {
                        line: line_no,
                        value: cell.into(),
                    });
                }
                row[label.index()] = p;
            }
            ids.push(id);
            rows.push(row);
        }
        Self::new(ids, rows, threshold)
    }
}

fn decide(row: &[f64; NUM_LABELS], threshold: f64) -> LabelVector {
    let mut bits = [false; NUM_LABELS];
    for (bit, p) in bits.iter_mut().zip(row) {
        *bit = *p > threshold;
    }
    LabelVector::from_bits(bits)
}

fn parse_real(cell: &str, line: usize) -> Result<f64, CorpusError> {
    cell.parse::<f64>().map_err(|_| CorpusError::MalformedNumber {
        line,
        value: cell.into(),
    })
}

/// Shortest round-trip decimal form, padded to at least six decimals.
pub fn format_probability(p: f64) -> String {
    let mut s = format!("{p}");
    match s.find('.') {
        Some(dot) => {
            let decimals = s.len() - dot - 1;
            s.extend(std::iter::repeat_n('0', 6usize.saturating_sub(decimals)));
        }
        None => s.push_str(".000000"),
    }
    s
}

/// Reads a prediction TSV: optional `# threshold=<real>` line, header
/// `ID<TAB>anger...trust`, then one row per example.
pub fn parse_predictions(path: &Path) -> Result<PredictionMatrix, CorpusError> {
    PredictionMatrix::parse_str(&read_text(path)?)
}
