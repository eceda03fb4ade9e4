//! Word attribution by perturbation. Variants of a sentence are built by
//! dropping whitespace-separated words; each variant is scored by the
//! model, and a word's score for a label is the mean, over variants that
//! keep it, of `kept fraction * probability`.

use std::collections::HashMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Dataset, PredictionMatrix};
use crate::labels::{EmotionLabel, LabelVector, NUM_LABELS};
use crate::metrics::{jaccard_sample, MetricsError};
use crate::models::{ModelArtifact, ModelError};

pub type PredictError = Box<dyn std::error::Error + Send + Sync>;

/// Anything that maps a sentence to eleven label probabilities.
pub trait TextPredictor: Sync {
    fn predict_text(&self, text: &str) -> Result<[f64; NUM_LABELS], PredictError>;
}

impl<F> TextPredictor for F
where
    F: Fn(&str) -> Result<[f64; NUM_LABELS], PredictError> + Sync,
{
    fn predict_text(&self, text: &str) -> Result<[f64; NUM_LABELS], PredictError> {
        self(text)
    }
}

impl TextPredictor for ModelArtifact {
    fn predict_text(&self, text: &str) -> Result<[f64; NUM_LABELS], PredictError> {
        Ok(self.probabilities_for_text(text)?)
    }
}

#[derive(Debug, Error)]
pub enum ExplainError {
    #[error("text has no words to explain")]
    EmptyText,
    #[error("predictor failed on variant `{variant}`: {source}")]
    PredictorFailure {
        variant: String,
        #[source]
        source: PredictError,
    },
    #[error("invalid explain configuration: {0}")]
    InvalidConfig(String),
    #[error("ids differ: {0}")]
    IdMismatch(String),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExplainConfig {
    /// Variants drawn in sampled mode, the full sentence included.
    pub n_variants: usize,
    pub keep_probability: f64,
    /// Sentences up to this many words use every non-empty mask.
    pub exhaustive_max_words: usize,
    pub seed: u64,
    pub include_empty_variant: bool,
}

impl Default for ExplainConfig {
    fn default() -> Self {
        ExplainConfig {
            n_variants: 1000,
            keep_probability: 0.5,
            exhaustive_max_words: 12,
            seed: 0,
            include_empty_variant: false,
        }
    }
}

impl ExplainConfig {
    pub fn validate(&self) -> Result<(), ExplainError> {
        if self.n_variants == 0 {
            return Err(ExplainError::InvalidConfig("n_variants must be at least 1".into()));
        }
        if !(self.keep_probability > 0.0 && self.keep_probability < 1.0) {
            return Err(ExplainError::InvalidConfig(format!(
                "keep_probability must lie in (0, 1), got {}",
                self.keep_probability
            )));
        }
        if self.exhaustive_max_words > 20 {
            return Err(ExplainError::InvalidConfig(
                "exhaustive_max_words above 20 is not supported".into(),
            ));
        }
        Ok(())
    }
}

/// Per-occurrence scores for one sentence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribution {
    pub words: Vec<String>,
    /// `scores[i][k]`: word occurrence `i`, label `k`.
    pub scores: Vec<[f64; NUM_LABELS]>,
    /// Variants scored, duplicates included.
    pub n_variants: usize,
    pub exhaustive: bool,
}

impl Attribution {
    pub fn score(&self, position: usize, label: EmotionLabel) -> f64 {
        self.scores[position][label.index()]
    }

    /// Word positions ordered by decreasing score for `label`, ties by
    /// position.
    pub fn ranking(&self, label: EmotionLabel) -> Vec<usize> {
        let k = label.index();
        let mut order: Vec<usize> = (0..self.words.len()).collect();
        order.sort_by(|&a, &b| self.scores[b][k].total_cmp(&self.scores[a][k]).then(a.cmp(&b)));
        order
    }

    /// Distinct words with the mean score over their occurrences, best
    /// first; ties keep first-occurrence order.
    pub fn top_words(&self, label: EmotionLabel, n: usize) -> Vec<(String, f64)> {
        let k = label.index();
        let mut types: Vec<(String, f64, usize)> = Vec::new();
        let mut index: HashMap<&str, usize> = HashMap::new();
        for (word, s) in self.words.iter().zip(&self.scores) {
            let slot = *index.entry(word).or_insert_with(|| {
                types.push((word.clone(), 0.0, 0));
                types.len() - 1
            });
            types[slot].1 += s[k];
            types[slot].2 += 1;
        }
        let mut means: Vec<(usize, String, f64)> = types
            .into_iter()
            .enumerate()
            .map(|(i, (w, sum, count))| (i, w, sum / count as f64))
            .collect();
        means.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)));
        means.into_iter().take(n).map(|(_, w, s)| (w, s)).collect()
    }
}

fn variant_text(words: &[&str], mask: &[bool]) -> String {
    words
        .iter()
        .zip(mask)
        .filter(|(_, keep)| **keep)
        .map(|(w, _)| *w)
        .collect::<Vec<_>>()
        .join(" ")
}

fn build_masks(n: usize, config: &ExplainConfig) -> (Vec<Vec<bool>>, bool) {
    if n <= config.exhaustive_max_words {
        let start = if config.include_empty_variant { 0u32 } else { 1 };
        let masks = (start..1u32 << n)
            .map(|m| (0..n).map(|i| m >> i & 1 == 1).collect())
            .collect();
        return (masks, true);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut masks = Vec::with_capacity(config.n_variants);
    masks.push(vec![true; n]);
    while masks.len() < config.n_variants {
        let mask: Vec<bool> = (0..n).map(|_| rng.random_bool(config.keep_probability)).collect();
        if config.include_empty_variant || mask.iter().any(|&b| b) {
            masks.push(mask);
        }
    }
    (masks, false)
}

/// Attributes each word occurrence of `text` for every label.
pub fn explain(
    predictor: &dyn TextPredictor,
    text: &str,
    config: &ExplainConfig,
) -> Result<Attribution, ExplainError> {
    config.validate()?;
    let words: Vec<&str> = text.split_whitespace().collect();
    if words.is_empty() {
        return Err(ExplainError::EmptyText);
    }
    let n = words.len();
    let (masks, exhaustive) = build_masks(n, config);

    // predict each distinct mask once; results keep mask order
    let mut distinct: Vec<&Vec<bool>> = Vec::new();
    let mut slot_of: HashMap<&Vec<bool>, usize> = HashMap::new();
    let slots: Vec<usize> = masks
        .iter()
        .map(|m| {
            *slot_of.entry(m).or_insert_with(|| {
                distinct.push(m);
                distinct.len() - 1
            })
        })
        .collect();
    let probs: Vec<[f64; NUM_LABELS]> = distinct
        .par_iter()
        .map(|mask| {
            let variant = variant_text(&words, mask);
            predictor
                .predict_text(&variant)
                .map_err(|source| ExplainError::PredictorFailure { variant, source })
        })
        .collect::<Result<_, _>>()?;

    let mut sums = vec![[0.0; NUM_LABELS]; n];
    let mut counts = vec![0usize; n];
    for (mask, &slot) in masks.iter().zip(&slots) {
        let kept = mask.iter().filter(|&&b| b).count();
        let weight = kept as f64 / n as f64;
        for i in (0..n).filter(|&i| mask[i]) {
            counts[i] += 1;
            for k in 0..NUM_LABELS {
                sums[i][k] += weight * probs[slot][k];
            }
        }
    }
    let scores = sums
        .into_iter()
        .zip(&counts)
        .map(|(s, &c)| s.map(|v| v / c as f64))
        .collect();
    Ok(Attribution {
        words: words.iter().map(|w| w.to_string()).collect(),
        scores,
        n_variants: masks.len(),
        exhaustive,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Winner {
    A,
    B,
    Tie,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelTopWords {
    pub label: EmotionLabel,
    pub a: Vec<(String, f64)>,
    pub b: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonEntry {
    pub id: String,
    pub text: String,
    pub gold: LabelVector,
    pub decisions_a: LabelVector,
    pub decisions_b: LabelVector,
    pub jaccard_a: f64,
    pub jaccard_b: f64,
    pub winner: Winner,
    pub labels: Vec<LabelTopWords>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub model_a: String,
    pub model_b: String,
    pub entries: Vec<ComparisonEntry>,
}

pub const TOP_WORDS: usize = 5;

fn format_words(words: &[(String, f64)]) -> String {
    if words.is_empty() {
        return "-".into();
    }
    words
        .iter()
        .map(|(w, s)| format!("{w}:{s:.4}"))
        .collect::<Vec<_>>()
        .join(" ")
}

impl ComparisonReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "A = {}\nB = {}", self.model_a, self.model_b);
        for e in &self.entries {
            let _ = writeln!(out, "\n[{}] {}", e.id, e.text);
            let _ = writeln!(out, "gold: {}", e.gold);
            let _ = writeln!(out, "A:    {}  (J {:.3})", e.decisions_a, e.jaccard_a);
            let _ = writeln!(out, "B:    {}  (J {:.3})", e.decisions_b, e.jaccard_b);
            let winner = match e.winner {
                Winner::A => "A",
                Winner::B => "B",
                Winner::Tie => "tie",
            };
            let _ = writeln!(out, "higher: {winner}");
            for l in &e.labels {
                let _ = writeln!(out, "  {:<12} A: {}", l.label.name(), format_words(&l.a));
                let _ = writeln!(out, "  {:<12} B: {}", "", format_words(&l.b));
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Explains the `k` examples with the largest `|J(A) - J(B)|` under both
/// models. Ties are broken by ascending id.
pub fn compare_models(
    preds_a: &PredictionMatrix,
    preds_b: &PredictionMatrix,
    gold: &Dataset,
    model_a: (&str, &dyn TextPredictor),
    model_b: (&str, &dyn TextPredictor),
    k: usize,
    config: &ExplainConfig,
) -> Result<ComparisonReport, ExplainError> {
    let diffs = crate::metrics::jaccard_difference(preds_a, preds_b, gold)?;
    if k > gold.len() {
        return Err(ExplainError::InvalidConfig(format!(
            "k = {k} exceeds the {} examples",
            gold.len()
        )));
    }
    let examples = gold.examples();
    let mut order: Vec<usize> = (0..examples.len()).collect();
    order.sort_by(|&i, &j| {
        diffs[j]
            .abs()
            .total_cmp(&diffs[i].abs())
            .then_with(|| examples[i].id.cmp(&examples[j].id))
    });
    let mut entries = Vec::with_capacity(k);
    for &i in order.iter().take(k) {
        let ex = &examples[i];
        let g = ex.labels.expect("labeled dataset");
        let da = preds_a.decision_for(&ex.id).ok_or_else(|| ExplainError::IdMismatch(ex.id.clone()))?;
        let db = preds_b.decision_for(&ex.id).ok_or_else(|| ExplainError::IdMismatch(ex.id.clone()))?;
        let (ja, jb) = (jaccard_sample(&da, &g), jaccard_sample(&db, &g));
        let att_a = explain(model_a.1, &ex.text, config)?;
        let att_b = explain(model_b.1, &ex.text, config)?;
        let labels = EmotionLabel::ALL
            .iter()
            .map(|&label| LabelTopWords {
                label,
                a: att_a.top_words(label, TOP_WORDS),
                b: att_b.top_words(label, TOP_WORDS),
            })
            .collect();
        entries.push(ComparisonEntry {
            id: ex.id.clone(),
            text: ex.text.clone(),
            gold: g,
            decisions_a: da,
            decisions_b: db,
            jaccard_a: ja,
            jaccard_b: jb,
            winner: if ja > jb {
                Winner::A
            } else if jb > ja {
                Winner::B
            } else {
                Winner::Tie
            },
            labels,
        });
    }
    Ok(ComparisonReport {
        model_a: model_a.0.to_string(),
        model_b: model_b.0.to_string(),
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Example, Split};
    use crate::models::logistic;
    use rand::seq::SliceRandom;

    fn constant(p: f64) -> impl Fn(&str) -> Result<[f64; NUM_LABELS], PredictError> + Sync {
        move |_: &str| Ok([p; NUM_LABELS])
    }

    #[test]
    fn one_word_scores_its_own_probability() {
        let predictor = |t: &str| -> Result<[f64; NUM_LABELS], PredictError> {
            assert_eq!(t, "hello");
            Ok(std::array::from_fn(|k| k as f64 / 10.0))
        };
        let a = explain(&predictor, "hello", &ExplainConfig::default()).unwrap();
        assert!(a.exhaustive);
        assert_eq!(a.n_variants, 1);
        assert_eq!(a.scores[0], std::array::from_fn(|k| k as f64 / 10.0));
    }

    #[test]
    fn two_word_worked_example() {
        let predictor = |t: &str| -> Result<[f64; NUM_LABELS], PredictError> {
            let p = if t.split(' ').any(|w| w == "a") { 0.8 } else { 0.2 };
            Ok([p; NUM_LABELS])
        };
        let a = explain(&predictor, "a b", &ExplainConfig::default()).unwrap();
        assert_eq!(a.n_variants, 3);
        for k in 0..NUM_LABELS {
            assert!((a.scores[0][k] - 0.6).abs() < 1e-15);
            assert!((a.scores[1][k] - 0.45).abs() < 1e-15);
        }
    }

    #[test]
    fn constant_predictor_gives_equal_scores() {
        let config = ExplainConfig {
            exhaustive_max_words: 3,
            n_variants: 200,
            ..ExplainConfig::default()
        };
        for text in ["one two three", "a b c d e f g h"] {
            let a = explain(&constant(0.7), text, &config).unwrap();
            for s in &a.scores {
                for k in 0..NUM_LABELS {
                    assert!((s[k] - a.scores[0][k]).abs() < 1e-12 || !a.exhaustive);
                    assert!((0.0..=1.0).contains(&s[k]));
                }
            }
        }
    }

    /// Predictor: per label, logistic of the summed weights of the kept
    /// words.
    fn linear(weights: HashMap<String, [f64; NUM_LABELS]>) -> impl Fn(&str) -> Result<[f64; NUM_LABELS], PredictError> + Sync {
        move |t: &str| {
            let mut z = [0.0; NUM_LABELS];
            for w in t.split_whitespace() {
                for k in 0..NUM_LABELS {
                    z[k] += weights[w][k];
                }
            }
            Ok(z.map(logistic))
        }
    }

    #[test]
    fn ranking_matches_linear_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let n = rng.random_range(1..=12);
            let words: Vec<String> = (0..n).map(|i| format!("w{i}")).collect();
            let mut weights = HashMap::new();
            let mut per_label: Vec<Vec<f64>> = Vec::new();
            for _ in 0..NUM_LABELS {
                let mut grid: Vec<f64> = (0..n).map(|i| i as f64 * 0.4 - 2.0).collect();
                grid.shuffle(&mut rng);
                per_label.push(grid);
            }
            for (i, w) in words.iter().enumerate() {
                weights.insert(w.clone(), std::array::from_fn(|k| per_label[k][i]));
            }
            let a = explain(&linear(weights), &words.join(" "), &ExplainConfig::default()).unwrap();
            for label in EmotionLabel::ALL {
                let k = label.index();
                let mut expected: Vec<usize> = (0..n).collect();
                expected.sort_by(|&x, &y| per_label[k][y].total_cmp(&per_label[k][x]));
                assert_eq!(a.ranking(label), expected);
            }
        }
    }

    #[test]
    fn exhaustive_is_seed_independent() {
        let mut weights = HashMap::new();
        for (i, w) in ["x", "y", "z"].iter().enumerate() {
            weights.insert(w.to_string(), [i as f64 - 1.0; NUM_LABELS]);
        }
        let p = linear(weights);
        let a = explain(&p, "x y z x", &ExplainConfig { seed: 1, ..ExplainConfig::default() }).unwrap();
        let b = explain(&p, "x y z x", &ExplainConfig { seed: 2, ..ExplainConfig::default() }).unwrap();
        assert_eq!(a, b);
        // duplicate occurrences get their own, here equal, scores
        assert_eq!(a.scores[0], a.scores[3]);
        let top = a.top_words(EmotionLabel::Joy, 5);
        assert_eq!(top.len(), 3);
        assert_eq!(top[0].0, "z");
    }

    fn sampled_scores(p: &dyn TextPredictor, text: &str, n_variants: usize, seed: u64) -> Vec<f64> {
        let config = ExplainConfig {
            exhaustive_max_words: 0,
            n_variants,
            seed,
            ..ExplainConfig::default()
        };
        explain(p, text, &config).unwrap().scores.iter().map(|s| s[0]).collect()
    }

    #[test]
    fn sampled_mode_is_deterministic_per_seed() {
        let p = constant(0.3);
        let text = "a b c d e f g h i j k l m n";
        assert_eq!(sampled_scores(&p, text, 50, 9), sampled_scores(&p, text, 50, 9));
    }

    #[test]
    fn sampled_error_shrinks_at_root_n() {
        let words: Vec<String> = (0..8).map(|i| format!("w{i}")).collect();
        let text = words.join(" ");
        let mut weights = HashMap::new();
        for (i, w) in words.iter().enumerate() {
            weights.insert(w.clone(), [i as f64 * 0.5 - 2.0; NUM_LABELS]);
        }
        let p = linear(weights);
        let spread = |n_variants: usize| -> f64 {
            let runs: Vec<f64> = (0..60).map(|s| sampled_scores(&p, &text, n_variants, s)[7]).collect();
            let mean = runs.iter().sum::<f64>() / runs.len() as f64;
            (runs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (runs.len() - 1) as f64).sqrt()
        };
        // four times the variants, half the standard error
        let ratio = spread(200) / spread(800);
        assert!((1.5..2.7).contains(&ratio), "ratio {ratio}");

        let exact = explain(&p, &text, &ExplainConfig::default()).unwrap().scores[7][0];
        let approx = sampled_scores(&p, &text, 20_000, 0)[7];
        assert!((exact - approx).abs() < 5e-3);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            explain(&constant(0.5), "   ", &ExplainConfig::default()),
            Err(ExplainError::EmptyText)
        ));
        let failing = |t: &str| -> Result<[f64; NUM_LABELS], PredictError> {
            if t == "b" {
                Err("boom".into())
            } else {
                Ok([0.5; NUM_LABELS])
            }
        };
        match explain(&failing, "a b", &ExplainConfig::default()) {
            Err(ExplainError::PredictorFailure { variant, .. }) => assert_eq!(variant, "b"),
            other => panic!("{other:?}"),
        }
        let bad = ExplainConfig {
            keep_probability: 1.0,
            ..ExplainConfig::default()
        };
        assert!(explain(&constant(0.5), "a", &bad).is_err());
    }

    fn gold() -> Dataset {
        let rows = [("e1", &["joy"][..]), ("e2", &["anger", "fear"]), ("e3", &["sadness"])];
        Dataset::new(
            "en",
            Split::Test,
            rows.iter()
                .map(|(id, l)| Example::new(*id, format!("text of {id}"), Some(LabelVector::from_names(l).unwrap())))
                .collect(),
        )
        .unwrap()
    }

    fn preds(rows: &[&[&str]]) -> PredictionMatrix {
        let probs = rows
            .iter()
            .map(|names| {
                let l = LabelVector::from_names(names).unwrap();
                std::array::from_fn(|k| if l.get_index(k) { 0.9 } else { 0.1 })
            })
            .collect();
        PredictionMatrix::new(vec!["e1".into(), "e2".into(), "e3".into()], probs, 0.5).unwrap()
    }

    #[test]
    fn comparison_selects_largest_differences() {
        let g = gold();
        let a = preds(&[&["joy"], &["anger"], &["trust"]]);
        let b = preds(&[&["joy"], &["anger", "fear"], &["sadness"]]);
        let (pa, pb) = (constant(0.2), constant(0.8));
        let r = compare_models(&a, &b, &g, ("svm", &pa), ("mlp", &pb), 2, &ExplainConfig::default()).unwrap();
        let ids: Vec<&str> = r.entries.iter().map(|e| e.id.as_str()).collect();
        assert_eq!(ids, ["e3", "e2"]);
        assert_eq!(r.entries[0].winner, Winner::B);
        assert_eq!(r.entries[0].labels.len(), NUM_LABELS);
        assert_eq!(r.entries[0].labels[0].a.len(), 3);
        assert!(r.to_text().contains("[e3] text of e3"));
        let parsed: ComparisonReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(parsed, r);
    }

    #[test]
    fn identical_models_fall_back_to_id_order() {
        let g = gold();
        let a = preds(&[&["joy"], &["anger"], &["trust"]]);
        let p = constant(0.5);
        let r = compare_models(&a, &a, &g, ("a", &p), ("b", &p), 3, &ExplainConfig::default()).unwrap();
        let ids: Vec<&str> = r.entries.iter().map(|e| e.id.as_str()).collect();
        assert_eq!(ids, ["e1", "e2", "e3"]);
        assert!(r.entries.iter().all(|e| e.winner == Winner::Tie));
        let empty = compare_models(&a, &a, &g, ("a", &p), ("b", &p), 0, &ExplainConfig::default()).unwrap();
        assert!(empty.entries.is_empty());
        assert!(compare_models(&a, &a, &g, ("a", &p), ("b", &p), 4, &ExplainConfig::default()).is_err());
    }
}
