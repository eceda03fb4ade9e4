use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{content_lines, read_text, CorpusError};
use crate::labels::{EmotionLabel, LabelVector, NUM_LABELS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
    Projected,
    Translated,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
            Split::Projected => "projected",
            Split::Translated => "translated",
        })
    }
}

impl FromStr for Split {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "dev" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            "projected" => Ok(Split::Projected),
            "translated" => Ok(Split::Translated),
            other => Err(CorpusError::Invalid(format!("unknown split `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    pub id: String,
    pub text: String,
    pub labels: Option<LabelVector>,
}

impl Example {
    pub fn new(id: impl Into<String>, text: impl Into<String>, labels: Option<LabelVector>) -> Self {
        Example {
            id: id.into(),
            text: text.into(),
            labels,
        }
    }
}

/// An ordered, split-tagged collection of examples.
///
/// Ids are unique, texts are non-empty after trimming, and either every
/// example carries labels or none does.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    language: String,
    split: Split,
    examples: Vec<Example>,
}

impl Dataset {
    pub fn new(
        language: impl Into<String>,
        split: Split,
        examples: Vec<Example>,
    ) -> Result<Self, CorpusError> {
        validate_examples(&examples, |i| i + 1)?;
        Ok(Dataset {
            language: language.into(),
            split,
            examples,
        })
    }

    pub fn empty(language: impl Into<String>, split: Split) -> Self {
        Dataset {
            language: language.into(),
            split,
            examples: Vec::new(),
        }
    }

    pub fn language(&self) -> &str {
        &self.language
    }

    pub fn split(&self) -> Split {
        self.split
    }

    pub fn with_language(mut self, language: impl Into<String>) -> Self {
        self.language = language.into();
        self
    }

    pub fn with_split(mut self, split: Split) -> Self {
        self.split = split;
        self
    }

    pub fn examples(&self) -> &[Example] {
        &self.examples
    }

    pub fn into_examples(self) -> Vec<Example> {
        self.examples
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Example> {
        self.examples.iter()
    }

    /// True when the dataset is non-empty and every example carries labels.
    pub fn is_labeled(&self) -> bool {
        self.examples.first().is_some_and(|e| e.labels.is_some())
    }

    pub fn ids(&self) -> Vec<String> {
        self.examples.iter().map(|e| e.id.clone()).collect()
    }

    pub fn texts(&self) -> impl Iterator<Item = &str> {
        self.examples.iter().map(|e| e.text.as_str())
    }

    /// Gold label vectors in order; `None` if the dataset is unlabeled.
    pub fn label_vectors(&self) -> Option<Vec<LabelVector>> {
        self.examples.iter().map(|e| e.labels).collect()
    }

    /// Appends `other` after `self`, keeping `self`'s language and split.
    pub fn concat(mut self, other: &Dataset) -> Result<Self, CorpusError> {
        self.examples.extend(other.examples.iter().cloned());
        validate_examples(&self.examples, |i| i + 1)?;
        Ok(self)
    }

    /// Serializes in the canonical TSV layout: `ID`, `Tweet`, then the 11
    /// emotion columns in canonical order for labeled datasets.
    pub fn to_tsv(&self) -> String {
        let labeled = self.is_labeled();
        let mut out = String::from("ID\tTweet");
        if labeled {
            for label in EmotionLabel::ALL {
                out.push('\t');
                out.push_str(label.name());
            }
        }
        out.push('\n');
        for ex in &self.examples {
            out.push_str(&ex.id);
            out.push('\t');
            out.push_str(&ex.text);
            if let Some(labels) = ex.labels {
                for bit in labels.bits() {
                    out.push_str(if *bit { "\t1" } else { "\t0" });
                }
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

    /// Parses TSV content. `expect_labels = false` ignores any emotion
    /// columns present.
    pub fn parse_str(content: &str, expect_labels: bool) -> Result<Self, CorpusError> {
        let mut lines = content_lines(content);
        let Some((header_line, header)) = lines.next() else {
            return Err(CorpusError::MissingColumn {
                line: 1,
                column: "ID".into(),
            });
        };
        let columns: Vec<&str> = header.split('\t').map(str::trim).collect();
        for (pos, expected) in ["ID", "Tweet"].iter().enumerate() {
            match columns.get(pos) {
                Some(c) if c.eq_ignore_ascii_case(expected) => {}
                _ => {
                    return Err(CorpusError::MissingColumn {
                        line: header_line,
                        column: (*expected).into(),
                    })
                }
            }
        }

        // label_column[k] = position of emotion k in the row
        let mut label_column = [usize::MAX; NUM_LABELS];
        for (pos, name) in columns.iter().enumerate().skip(2) {
            let label: EmotionLabel = name.parse().map_err(|source| CorpusError::UnknownLabel {
                line: header_line,
                source,
            })?;
            if label_column[label.index()] != usize::MAX {
                return Err(CorpusError::Invalid(format!(
                    "line {header_line}: column `{name}` appears twice"
                )));
            }
            label_column[label.index()] = pos;
        }
        if expect_labels {
            if let Some(missing) = EmotionLabel::ALL
                .iter()
                .find(|l| label_column[l.index()] == usize::MAX)
            {
                return Err(CorpusError::MissingColumn {
                    line: header_line,
                    column: missing.name().into(),
                });
            }
        }

        let mut examples = Vec::new();
        let mut line_numbers = Vec::new();
        for (line_no, line) in lines {
            let cells: Vec<&str> = line.split('\t').collect();
            // unlabeled rows may drop trailing label cells
            let bad_width = if expect_labels {
                cells.len() != columns.len()
            } else {
                cells.len() < 2 || cells.len() > columns.len()
            };
            if bad_width {
                return Err(CorpusError::RowWidthMismatch {
                    line: line_no,
                    expected: columns.len(),
                    found: cells.len(),
                });
            }
            let id = cells[0].trim().to_string();
            let text = cells[1].to_string();
            let labels = if expect_labels {
                let mut v = LabelVector::empty();
                for label in EmotionLabel::ALL {
                    let cell = cells[label_column[label.index()]].trim();
                    match cell {
                        "0" => {}
                        "1" => v.set(label, true),
                        other => {
                            return Err(CorpusError::MalformedLabel {
                                line: line_no,
                                column: label.name().into(),
                                value: other.into(),
                            })
                        }
                    }
                }
                Some(v)
            } else {
                None
            };
            examples.push(Example { id, text, labels });
            line_numbers.push(line_no);
        }
        validate_examples(&examples, |i| line_numbers[i])?;
        Ok(Dataset {
            language: "und".into(),
            split: Split::Train,
            examples,
        })
    }
}

impl<'a> IntoIterator for &'a Dataset {
    type Item = &'a Example;
    type IntoIter = std::slice::Iter<'a, Example>;

    fn into_iter(self) -> Self::IntoIter {
        self.examples.iter()
    }
}

fn validate_examples(
    examples: &[Example],
    line_of: impl Fn(usize) -> usize,
) -> Result<(), CorpusError> {
    let mut seen = HashSet::with_capacity(examples.len());
    let labeled = examples.first().map(|e| e.labels.is_some());
    for (i, ex) in examples.iter().enumerate() {
        if !seen.insert(ex.id.as_str()) {
            return Err(CorpusError::DuplicateId {
                line: line_of(i),
                id: ex.id.clone(),
            });
        }
        if ex.text.trim().is_empty() {
            return Err(CorpusError::EmptyText {
                line: line_of(i),
                id: ex.id.clone(),
            });
        }
        if ex.text.contains(['\t', '\n', '\r']) {
            return Err(CorpusError::Invalid(format!(
                "example `{}` contains a tab or line break",
                ex.id
            )));
        }
        if Some(ex.labels.is_some()) != labeled {
            return Err(CorpusError::MixedLabels);
        }
    }
    Ok(())
}

/// Reads a dataset TSV file. Language is `und` and split `train` until
/// set with [`Dataset::with_language`] / [`Dataset::with_split`].
pub fn parse_dataset(path: &Path, expect_labels: bool) -> Result<Dataset, CorpusError> {
    Dataset::parse_str(&read_text(path)?, expect_labels)
}
