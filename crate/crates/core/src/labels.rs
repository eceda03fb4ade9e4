//! The fixed 11-emotion label space.
//!
//! Every binary encoding in the crate (dataset columns, prediction files,
//! model weight blocks, report tables) uses the canonical order defined by
//! [`EmotionLabel::ALL`], which is alphabetical.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of emotion labels.
pub const NUM_LABELS: usize = 11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmotionLabel {
    Anger,
    Anticipation,
    Disgust,
    Fear,
    Joy,
    Love,
    Optimism,
    Pessimism,
    Sadness,
    Surprise,
    Trust,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown emotion label `{0}`")]
pub struct UnknownLabel(pub String);

impl EmotionLabel {
    /// All labels in canonical order.
    pub const ALL: [EmotionLabel; NUM_LABELS] = [
        EmotionLabel::Anger,
        EmotionLabel::Anticipation,
        EmotionLabel::Disgust,
        EmotionLabel::Fear,
        EmotionLabel::Joy,
        EmotionLabel::Love,
        EmotionLabel::Optimism,
        EmotionLabel::Pessimism,
        EmotionLabel::Sadness,
        EmotionLabel::Surprise,
        EmotionLabel::Trust,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            EmotionLabel::Anger => "anger",
            EmotionLabel::Anticipation => "anticipation",
            EmotionLabel::Disgust => "disgust",
            EmotionLabel::Fear => "fear",
            EmotionLabel::Joy => "joy",
            EmotionLabel::Love => "love",
            EmotionLabel::Optimism => "optimism",
            EmotionLabel::Pessimism => "pessimism",
            EmotionLabel::Sadness => "sadness",
            EmotionLabel::Surprise => "surprise",
            EmotionLabel::Trust => "trust",
        }
    }
}

impl fmt::Display for EmotionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EmotionLabel {
    type Err = UnknownLabel;

    /// Case-insensitive; surrounding whitespace is ignored.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let wanted = s.trim();
        Self::ALL
            .iter()
            .copied()
            .find(|label| label.name().eq_ignore_ascii_case(wanted))
            .ok_or_else(|| UnknownLabel(s.to_string()))
    }
}

/// Presence or absence of each of the 11 emotions for one example.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct LabelVector([bool; NUM_LABELS]);

impl LabelVector {
    pub const fn empty() -> Self {
        LabelVector([false; NUM_LABELS])
    }

    pub const fn from_bits(bits: [bool; NUM_LABELS]) -> Self {
        LabelVector(bits)
    }

    /// Builds a vector with exactly the named emotions set.
    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Result<Self, UnknownLabel> {
        let mut out = Self::empty();
        for name in names {
            let label: EmotionLabel = name.as_ref().parse()?;
            out.set(label, true);
        }
        Ok(out)
    }

    pub fn from_labels<I: IntoIterator<Item = EmotionLabel>>(labels: I) -> Self {
        let mut out = Self::empty();
        for label in labels {
            out.set(label, true);
        }
        out
    }

    pub fn bits(&self) -> &[bool; NUM_LABELS] {
        &self.0
    }

    pub fn get(&self, label: EmotionLabel) -> bool {
        self.0[label.index()]
    }

    pub fn get_index(&self, index: usize) -> bool {
        self.0[index]
    }

    pub fn set(&mut self, label: EmotionLabel, value: bool) {
        self.0[label.index()] = value;
    }

    pub fn set_index(&mut self, index: usize, value: bool) {
        self.0[index] = value;
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    /// Set labels in canonical order.
    pub fn labels(&self) -> impl Iterator<Item = EmotionLabel> + '_ {
        EmotionLabel::ALL.iter().copied().filter(move |l| self.get(*l))
    }

    pub fn intersection_count(&self, other: &LabelVector) -> usize {
        self.0.iter().zip(other.0.iter()).filter(|(a, b)| **a && **b).count()
    }

    pub fn union_count(&self, other: &LabelVector) -> usize {
        self.0.iter().zip(other.0.iter()).filter(|(a, b)| **a || **b).count()
    }
}

impl fmt::Display for LabelVector {
    /// Comma-separated label names, `-` when empty.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("-");
        }
        let names: Vec<&str> = self.labels().map(EmotionLabel::name).collect();
        f.write_str(&names.join(","))
    }
}

pub fn label_vector_from_names<S: AsRef<str>>(names: &[S]) -> Result<LabelVector, UnknownLabel> {
    LabelVector::from_names(names)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_order_is_alphabetical() {
        let names: Vec<&str> = EmotionLabel::ALL.iter().map(|l| l.name()).collect();
        let mut sorted = names.clone();
        sorted.sort_unstable();
        assert_eq!(names, sorted);
        for (i, l) in EmotionLabel::ALL.iter().enumerate() {
            assert_eq!(l.index(), i);
        }
    }

    #[test]
    fn parse_is_case_insensitive() {
        assert_eq!("JOY".parse::<EmotionLabel>().unwrap(), EmotionLabel::Joy);
        assert_eq!("Pessimism".parse::<EmotionLabel>().unwrap(), EmotionLabel::Pessimism);
        assert!("happiness".parse::<EmotionLabel>().is_err());
    }

    #[test]
    fn from_names() {
        let v = label_vector_from_names(&["joy", "love"]).unwrap();
        assert_eq!(v.count(), 2);
        assert!(v.get(EmotionLabel::Joy) && v.get(EmotionLabel::Love));
        assert_eq!(label_vector_from_names::<&str>(&[]).unwrap(), LabelVector::empty());
        assert_eq!(
            label_vector_from_names(&["happiness"]).unwrap_err(),
            UnknownLabel("happiness".into())
        );
    }

    #[test]
    fn set_operations() {
        let a = LabelVector::from_labels([EmotionLabel::Joy, EmotionLabel::Love]);
        let b = LabelVector::from_labels([EmotionLabel::Joy, EmotionLabel::Optimism]);
        assert_eq!(a.intersection_count(&b), 1);
        assert_eq!(a.union_count(&b), 3);
        assert_eq!(a.to_string(), "joy,love");
        assert_eq!(LabelVector::empty().to_string(), "-");
    }
}
