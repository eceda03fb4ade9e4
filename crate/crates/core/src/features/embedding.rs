use std::collections::HashMap;
use std::path::Path;

use super::{FeatureError, FeatureVector};

/// Term (or example id) to fixed-length vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        EmbeddingTable {
            dim,
            vectors: HashMap::new(),
        }
    }

    pub fn insert(&mut self, term: impl Into<String>, vector: Vec<f64>) -> Result<(), FeatureError> {
        if vector.len() != self.dim {
            return Err(FeatureError::DimensionMismatch {
                expected: self.dim,
                found: vector.len(),
            });
        }
        self.vectors.insert(term.into(), vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, term: &str) -> Option<&[f64]> {
        self.vectors.get(term).map(Vec::as_slice)
    }

    /// Parses the word2vec text layout: a `<count> <dim>` header, then
    /// `term v1 ... vD` per line. Later duplicates replace earlier ones.
    pub fn parse_str(content: &str) -> Result<Self, FeatureError> {
        let content = content.strip_prefix('\u{feff}').unwrap_or(content);
        let mut lines = content
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim_end()))
            .filter(|(_, l)| !l.is_empty());
        let (_, header) = lines.next().ok_or(FeatureError::MalformedLine {
            line: 1,
            reason: "missing `<count> <dim>` header".into(),
        })?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let parse_usize = |s: &str| s.parse::<usize>().ok();
        let (declared, dim) = match fields.as_slice() {
            [count, dim] => match (parse_usize(count), parse_usize(dim)) {
                (Some(c), Some(d)) if d > 0 => (c, d),
                _ => {
                    return Err(FeatureError::MalformedLine {
                        line: 1,
                        reason: format!("bad header `{header}`"),
                    })
                }
            },
            _ => {
                return Err(FeatureError::MalformedLine {
                    line: 1,
                    reason: format!("bad header `{header}`"),
                })
            }
        };

        let mut table = EmbeddingTable::new(dim);
        for (line_no, line) in lines {
            let mut fields = line.split_whitespace();
            let term = fields.next().expect("line is non-empty");
            let values = fields
                .map(|f| {
                    f.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| FeatureError::MalformedLine {
                            line: line_no,
                            reason: format!("bad value `{f}`"),
                        })
                })
                .collect::<Result<Vec<f64>, _>>()?;
            if values.len() != dim {
                return Err(FeatureError::DimensionMismatchAt {
                    line: line_no,
                    expected: dim,
                    found: values.len(),
                });
            }
            if table.vectors.insert(term.to_string(), values).is_some() {
                log::warn!("embedding line {line_no}: duplicate term `{term}`, keeping the later vector");
            }
        }
        if table.len() != declared {
            log::warn!(
                "embedding header declares {declared} vectors but {} were read",
                table.len()
            );
        }
        Ok(table)
    }

    pub fn to_text(&self) -> String {
        let mut terms: Vec<&String> = self.vectors.keys().collect();
        terms.sort();
        let mut out = format!("{} {}\n", self.vectors.len(), self.dim);
        for term in terms {
            out.push_str(term);
            for v in &self.vectors[term] {
                out.push(' ');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out
    }
}

pub fn load_embedding_table(path: &Path) -> Result<EmbeddingTable, FeatureError> {
    let content = std::fs::read_to_string(path).map_err(|source| FeatureError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    EmbeddingTable::parse_str(&content)
}

/// Mean of the in-vocabulary token vectors; zero when none is known.
pub fn embed_average<S: AsRef<str>>(tokens: &[S], table: &EmbeddingTable) -> FeatureVector {
    let mut sum = vec![0.0; table.dim()];
    let mut hits = 0usize;
    for token in tokens {
        if let Some(v) = table.get(token.as_ref()) {
            for (s, x) in sum.iter_mut().zip(v) {
                *s += x;
            }
            hits += 1;
        }
    }
    if hits > 0 {
        let n = hits as f64;
        sum.iter_mut().for_each(|s| *s /= n);
    }
    FeatureVector::from_dense(&sum)
}
