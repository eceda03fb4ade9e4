use serde::{Deserialize, Serialize};

use super::FeatureError;

/// Sparse vector over a fixed-dimension feature space.
///
/// Entries are sorted by strictly increasing index, every index is below
/// `dim`, and no stored value is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    dim: usize,
    entries: Vec<(usize, f64)>,
}

impl FeatureVector {
    pub fn zeros(dim: usize) -> Self {
        FeatureVector {
            dim,
            entries: Vec::new(),
        }
    }

    /// Builds a vector from `(index, value)` pairs in any order. Duplicate
    /// indices are summed and zeros dropped.
    pub fn from_pairs(
        dim: usize,
        pairs: impl IntoIterator<Item = (usize, f64)>,
    ) -> Result<Self, FeatureError> {
        let mut entries: Vec<(usize, f64)> = pairs.into_iter().collect();
        if let Some(&(index, _)) = entries.iter().find(|(i, _)| *i >= dim) {
            return Err(FeatureError::IndexOutOfRange { index, dim });
        }
        if entries.iter().any(|(_, v)| !v.is_finite()) {
            return Err(FeatureError::NonFinite);
        }
        entries.sort_by_key(|(i, _)| *i);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
        for (i, v) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == i => last.1 += v,
                _ => merged.push((i, v)),
            }
        }
        merged.retain(|(_, v)| *v != 0.0);
        Ok(FeatureVector {
            dim,
            entries: merged,
        })
    }

    pub fn from_dense(values: &[f64]) -> Self {
        FeatureVector {
            dim: values.len(),
            entries: values
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(i, v)| (i, *v))
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, index: usize) -> f64 {
        self.entries
            .binary_search_by_key(&index, |(i, _)| *i)
            .map(|pos| self.entries[pos].1)
            .unwrap_or(0.0)
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for &(i, v) in &self.entries {
            out[i] = v;
        }
        out
    }

    pub fn squared_norm(&self) -> f64 {
        self.entries.iter().map(|(_, v)| v * v).sum()
    }

    pub fn norm(&self) -> f64 {
        self.squared_norm().sqrt()
    }

    /// Unit-length copy; the zero vector stays zero.
    pub fn l2_normalized(&self) -> Self {
        let norm = self.norm();
        if norm == 0.0 {
            return self.clone();
        }
        let entries = self
            .entries
            .iter()
            .map(|&(i, v)| (i, v / norm))
            .filter(|(_, v)| *v != 0.0)
            .collect();
        FeatureVector {
            dim: self.dim,
            entries,
        }
    }

    /// Dot product with a dense weight vector of the same dimension.
    pub fn dot_dense(&self, weights: &[f64]) -> f64 {
        debug_assert_eq!(weights.len(), self.dim);
        self.entries.iter().map(|&(i, v)| weights[i] * v).sum()
    }

    pub fn dot(&self, other: &FeatureVector) -> f64 {
        let (mut a, mut b) = (self.entries.iter().peekable(), other.entries.iter().peekable());
        let mut sum = 0.0;
        while let (Some(&&(i, x)), Some(&&(j, y))) = (a.peek(), b.peek()) {
            match i.cmp(&j) {
                std::cmp::Ordering::Less => {
                    a.next();
                }
                std::cmp::Ordering::Greater => {
                    b.next();
                }
                std::cmp::Ordering::Equal => {
                    sum += x * y;
                    a.next();
                    b.next();
                }
            }
        }
        sum
    }

    /// `weights += scale * self`.
    pub fn add_scaled_to(&self, weights: &mut [f64], scale: f64) {
        for &(i, v) in &self.entries {
            weights[i] += scale * v;
        }
    }
}

/// Concatenates blocks left to right after L2-normalizing each block
/// independently. Block `i` occupies `[offset_i, offset_i + dim_i)`.
pub fn concat_blocks(blocks: &[FeatureVector]) -> FeatureVector {
    let dim = blocks.iter().map(FeatureVector::dim).sum();
    let mut entries = Vec::with_capacity(blocks.iter().map(FeatureVector::nnz).sum());
    let mut offset = 0;
    for block in blocks {
        let normalized = block.l2_normalized();
        entries.extend(normalized.entries.iter().map(|&(i, v)| (i + offset, v)));
        offset += block.dim;
    }
    FeatureVector { dim, entries }
}
