//! Multi-label evaluation: sample-averaged Jaccard, macro-F1 and mean
//! per-label accuracy.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Dataset, PredictionMatrix};
use crate::labels::{EmotionLabel, LabelVector, NUM_LABELS};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("prediction and gold ids differ: {0}")]
    IdMismatch(String),
    #[error("gold dataset has no labels")]
    UnlabeledGold,
    #[error("nothing to evaluate")]
    Empty,
}

/// `|P ∩ G| / |P ∪ G|`, 1 when both are empty.
pub fn jaccard_sample(pred: &LabelVector, gold: &LabelVector) -> f64 {
    let union = pred.union_count(gold);
    if union == 0 {
        1.0
    } else {
        pred.intersection_count(gold) as f64 / union as f64
    }
}

/// Binary confusion counts for one label.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    fn ratio(num: usize, den: usize) -> f64 {
        if den == 0 {
            0.0
        } else {
            num as f64 / den as f64
        }
    }

    pub fn precision(&self) -> f64 {
        Self::ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        Self::ratio(self.tp, self.tp + self.fn_)
    }

    /// Harmonic mean of precision and recall; 0 when either is undefined
    /// or both are 0.
    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }

    pub fn accuracy(&self) -> f64 {
        Self::ratio(self.tp + self.tn, self.tp + self.fp + self.fn_ + self.tn)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub jaccard: f64,
    pub macro_f1: f64,
    /// Mean over labels of per-label binary accuracy.
    pub avg_accuracy: f64,
    pub per_class_f1: [f64; NUM_LABELS],
    /// Fraction of examples whose label set is predicted exactly.
    pub exact_match: f64,
    pub n_examples: usize,
    pub confusion: [Confusion; NUM_LABELS],
}

fn percent(v: f64) -> String {
    format!("{:.1}", v * 100.0)
}

impl EvalReport {
    /// Aligned two-column table, scores ×100 to one decimal.
    pub fn to_text(&self) -> String {
        let mut rows: Vec<(String, String)> = vec![
            ("examples".into(), self.n_examples.to_string()),
            ("J".into(), percent(self.jaccard)),
            ("F".into(), percent(self.macro_f1)),
            ("A".into(), percent(self.avg_accuracy)),
            ("exact match".into(), percent(self.exact_match)),
        ];
        for label in EmotionLabel::ALL {
            rows.push((
                format!("F1 {label}"),
                percent(self.per_class_f1[label.index()]),
            ));
        }
        let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        let mut out = String::new();
        for (k, v) in rows {
            let _ = writeln!(out, "{k:<width$}  {v:>6}");
        }
        out
    }

    /// `key=value` lines at full precision.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "n_examples={}", self.n_examples);
        let _ = writeln!(out, "jaccard={}", self.jaccard);
        let _ = writeln!(out, "macro_f1={}", self.macro_f1);
        let _ = writeln!(out, "avg_accuracy={}", self.avg_accuracy);
        let _ = writeln!(out, "exact_match={}", self.exact_match);
        for label in EmotionLabel::ALL {
            let _ = writeln!(out, "f1.{label}={}", self.per_class_f1[label.index()]);
        }
        out
    }
}

/// Scores already-aligned prediction and gold rows.
pub fn evaluate_vectors(preds: &[LabelVector], gold: &[LabelVector]) -> Result<EvalReport, MetricsError> {
    if preds.len() != gold.len() {
        return Err(MetricsError::IdMismatch(format!(
            "{} predictions for {} gold rows",
            preds.len(),
            gold.len()
        )));
    }
    if preds.is_empty() {
        return Err(MetricsError::Empty);
    }
    let n = preds.len();
    let mut confusion = [Confusion::default(); NUM_LABELS];
    let mut jaccard_sum = 0.0;
    let mut exact = 0usize;
    for (p, g) in preds.iter().zip(gold) {
        jaccard_sum += jaccard_sample(p, g);
        if p == g {
            exact += 1;
        }
        for (k, c) in confusion.iter_mut().enumerate() {
            match (p.get_index(k), g.get_index(k)) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
    }
    let per_class_f1 = confusion.map(|c| c.f1());
    Ok(EvalReport {
        jaccard: jaccard_sum / n as f64,
        macro_f1: per_class_f1.iter().sum::<f64>() / NUM_LABELS as f64,
        avg_accuracy: confusion.iter().map(Confusion::accuracy).sum::<f64>() / NUM_LABELS as f64,
        per_class_f1,
        exact_match: exact as f64 / n as f64,
        n_examples: n,
        confusion,
    })
}

/// Gold label vectors in prediction row order.
fn align(preds: &PredictionMatrix, gold: &Dataset) -> Result<Vec<LabelVector>, MetricsError> {
    if !gold.is_labeled() {
        return Err(MetricsError::UnlabeledGold);
    }
    if preds.len() != gold.len() {
        return Err(MetricsError::IdMismatch(format!(
            "{} predictions for {} gold examples",
            preds.len(),
            gold.len()
        )));
    }
    let mut out = vec![LabelVector::empty(); preds.len()];
    for ex in gold.iter() {
        let pos = preds
            .position(&ex.id)
            .ok_or_else(|| MetricsError::IdMismatch(format!("no prediction for `{}`", ex.id)))?;
        out[pos] = ex.labels.expect("labeled dataset");
    }
    Ok(out)
}

/// Aligns by id and scores the thresholded decisions.
pub fn evaluate(preds: &PredictionMatrix, gold: &Dataset) -> Result<EvalReport, MetricsError> {
    let gold = align(preds, gold)?;
    evaluate_vectors(preds.decisions(), &gold)
}

/// Per example of `gold`, in its order: `J(A, gold) - J(B, gold)`.
pub fn jaccard_difference(
    preds_a: &PredictionMatrix,
    preds_b: &PredictionMatrix,
    gold: &Dataset,
) -> Result<Vec<f64>, MetricsError> {
    if !gold.is_labeled() {
        return Err(MetricsError::UnlabeledGold);
    }
    if preds_a.len() != gold.len() || preds_b.len() != gold.len() {
        return Err(MetricsError::IdMismatch(format!(
            "{} and {} predictions for {} gold examples",
            preds_a.len(),
            preds_b.len(),
            gold.len()
        )));
    }
    gold.iter()
        .map(|ex| {
            let g = ex.labels.expect("labeled dataset");
            let a = preds_a
                .decision_for(&ex.id)
                .ok_or_else(|| MetricsError::IdMismatch(format!("`{}` missing from A", ex.id)))?;
            let b = preds_b
                .decision_for(&ex.id)
                .ok_or_else(|| MetricsError::IdMismatch(format!("`{}` missing from B", ex.id)))?;
            Ok(jaccard_sample(&a, &g) - jaccard_sample(&b, &g))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Example, Split};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn lv(names: &[&str]) -> LabelVector {
        LabelVector::from_names(names).unwrap()
    }

    fn dataset(rows: &[(&str, LabelVector)]) -> Dataset {
        Dataset::new(
            "en",
            Split::Test,
            rows.iter()
                .map(|(id, l)| Example::new(*id, format!("text {id}"), Some(*l)))
                .collect(),
        )
        .unwrap()
    }

    fn matrix(rows: &[(&str, LabelVector)]) -> PredictionMatrix {
        let probs = rows
            .iter()
            .map(|(_, l)| {
                let mut p = [0.0; NUM_LABELS];
                for k in 0..NUM_LABELS {
                    p[k] = if l.get_index(k) { 0.9 } else { 0.1 };
                }
                p
            })
            .collect();
        PredictionMatrix::new(rows.iter().map(|(id, _)| id.to_string()).collect(), probs, 0.5).unwrap()
    }

    /// Independent scorer written from the definitions with plain loops
    /// over bit arrays.
    fn oracle(preds: &[[bool; 11]], gold: &[[bool; 11]]) -> (f64, f64, f64) {
        let n = preds.len() as f64;
        let mut j = 0.0;
        for (p, g) in preds.iter().zip(gold) {
            let mut inter = 0.0;
            let mut uni = 0.0;
            for k in 0..11 {
                if p[k] && g[k] {
                    inter += 1.0;
                }
                if p[k] || g[k] {
                    uni += 1.0;
                }
            }
            j += if uni == 0.0 { 1.0 } else { inter / uni };
        }
        let mut f = 0.0;
        let mut a = 0.0;
        for k in 0..11 {
            let (mut tp, mut fp, mut fnn, mut correct) = (0.0, 0.0, 0.0, 0.0);
            for (p, g) in preds.iter().zip(gold) {
                if p[k] == g[k] {
                    correct += 1.0;
                }
                if p[k] && g[k] {
                    tp += 1.0;
                } else if p[k] {
                    fp += 1.0;
                } else if g[k] {
                    fnn += 1.0;
                }
            }
            let prec = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
            let rec = if tp + fnn > 0.0 { tp / (tp + fnn) } else { 0.0 };
            f += if prec + rec > 0.0 { 2.0 * prec * rec / (prec + rec) } else { 0.0 };
            a += correct / n;
        }
        (j / n, f / 11.0, a / 11.0)
    }

    #[test]
    fn jaccard_examples() {
        assert!((jaccard_sample(&lv(&["joy", "love"]), &lv(&["joy", "optimism"])) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(jaccard_sample(&lv(&["fear"]), &lv(&["fear"])), 1.0);
        assert_eq!(jaccard_sample(&LabelVector::empty(), &LabelVector::empty()), 1.0);
        assert_eq!(jaccard_sample(&lv(&["fear"]), &LabelVector::empty()), 0.0);
    }

    #[test]
    fn two_example_fixture() {
        let gold = dataset(&[("1", lv(&["anger", "fear"])), ("2", lv(&["joy"]))]);
        let preds = matrix(&[("1", lv(&["anger"])), ("2", lv(&["joy"]))]);
        let r = evaluate(&preds, &gold).unwrap();
        assert_eq!(r.jaccard, 0.75);
        assert_eq!(r.macro_f1, 2.0 / 11.0);
        assert_eq!(r.avg_accuracy, 21.0 / 22.0);
        assert_eq!(r.per_class_f1[EmotionLabel::Anger.index()], 1.0);
        assert_eq!(r.per_class_f1[EmotionLabel::Fear.index()], 0.0);
        assert_eq!(r.per_class_f1[EmotionLabel::Joy.index()], 1.0);
        assert_eq!(r.exact_match, 0.5);
        assert_eq!(r.n_examples, 2);
    }

    #[test]
    fn all_empty_conventions() {
        let e = LabelVector::empty();
        let r = evaluate_vectors(&[e, e], &[e, e]).unwrap();
        assert_eq!((r.jaccard, r.avg_accuracy, r.macro_f1), (1.0, 1.0, 0.0));
    }

    #[test]
    fn perfect_predictions() {
        let rows = [("a", lv(&["anger", "trust"])), ("b", lv(&["sadness"]))];
        let r = evaluate(&matrix(&rows), &dataset(&rows)).unwrap();
        assert_eq!((r.jaccard, r.avg_accuracy), (1.0, 1.0));
        // only three labels ever occur, the rest score 0 by convention
        assert_eq!(r.macro_f1, 3.0 / 11.0);
    }

    #[test]
    fn alignment_is_by_id() {
        let gold = dataset(&[("1", lv(&["anger"])), ("2", lv(&["joy"]))]);
        let preds = matrix(&[("2", lv(&["joy"])), ("1", lv(&["anger"]))]);
        assert_eq!(evaluate(&preds, &gold).unwrap().jaccard, 1.0);
        let other = matrix(&[("2", lv(&["joy"])), ("3", lv(&["anger"]))]);
        assert!(matches!(evaluate(&other, &gold), Err(MetricsError::IdMismatch(_))));
        let short = matrix(&[("1", lv(&["anger"]))]);
        assert!(matches!(evaluate(&short, &gold), Err(MetricsError::IdMismatch(_))));
    }

    #[test]
    fn unlabeled_gold_is_rejected() {
        let gold = Dataset::new("en", Split::Test, vec![Example::new("1", "x", None)]).unwrap();
        let preds = matrix(&[("1", lv(&["anger"]))]);
        assert_eq!(evaluate(&preds, &gold), Err(MetricsError::UnlabeledGold));
    }

    #[test]
    fn matches_oracle_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(2018);
        let mut p = Vec::new();
        let mut g = Vec::new();
        for _ in 0..1000 {
            let a: [bool; 11] = std::array::from_fn(|_| rng.random_bool(0.3));
            let b: [bool; 11] = std::array::from_fn(|_| rng.random_bool(0.3));
            p.push(a);
            g.push(b);
        }
        let pv: Vec<LabelVector> = p.iter().map(|b| LabelVector::from_bits(*b)).collect();
        let gv: Vec<LabelVector> = g.iter().map(|b| LabelVector::from_bits(*b)).collect();
        let r = evaluate_vectors(&pv, &gv).unwrap();
        let (j, f, a) = oracle(&p, &g);
        assert!((r.jaccard - j).abs() < 1e-12);
        assert!((r.macro_f1 - f).abs() < 1e-12);
        assert!((r.avg_accuracy - a).abs() < 1e-12);
    }

    #[test]
    fn difference_examples() {
        let gold = dataset(&[("1", lv(&["anger"])), ("2", lv(&["joy", "love"]))]);
        let a = matrix(&[("1", lv(&["anger"])), ("2", lv(&["joy"]))]);
        let b = matrix(&[("1", lv(&["fear"])), ("2", lv(&["joy"]))]);
        assert_eq!(jaccard_difference(&a, &b, &gold).unwrap(), [1.0, 0.0]);
        assert_eq!(jaccard_difference(&b, &a, &gold).unwrap(), [-1.0, 0.0]);
        assert_eq!(jaccard_difference(&a, &a, &gold).unwrap(), [0.0, 0.0]);
    }

    #[test]
    fn text_and_kv_output() {
        let gold = dataset(&[("1", lv(&["anger", "fear"])), ("2", lv(&["joy"]))]);
        let preds = matrix(&[("1", lv(&["anger"])), ("2", lv(&["joy"]))]);
        let r = evaluate(&preds, &gold).unwrap();
        let text = r.to_text();
        assert!(text.lines().any(|l| l.starts_with("J ") && l.ends_with("75.0")));
        assert!(text.lines().any(|l| l.starts_with("A ") && l.ends_with("95.5")));
        let kv = r.to_kv();
        assert!(kv.contains("jaccard=0.75\n"));
        assert!(kv.contains(&format!("macro_f1={}\n", 2.0 / 11.0)));
        assert_eq!(kv.lines().count(), 5 + NUM_LABELS);
    }

    fn bits() -> impl Strategy<Value = [bool; 11]> {
        proptest::array::uniform11(any::<bool>())
    }

    proptest! {
        #[test]
        fn scores_are_bounded_and_order_free(
            rows in proptest::collection::vec((bits(), bits()), 1..30),
            seed in any::<u64>(),
        ) {
            let p: Vec<LabelVector> = rows.iter().map(|r| LabelVector::from_bits(r.0)).collect();
            let g: Vec<LabelVector> = rows.iter().map(|r| LabelVector::from_bits(r.1)).collect();
            let r = evaluate_vectors(&p, &g).unwrap();
            for v in [r.jaccard, r.macro_f1, r.avg_accuracy, r.exact_match].iter().chain(&r.per_class_f1) {
                prop_assert!((0.0..=1.0).contains(v));
            }

            let mut order: Vec<usize> = (0..rows.len()).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rand::seq::SliceRandom::shuffle(&mut order[..], &mut rng);
            let ps: Vec<LabelVector> = order.iter().map(|&i| p[i]).collect();
            let gs: Vec<LabelVector> = order.iter().map(|&i| g[i]).collect();
            let shuffled = evaluate_vectors(&ps, &gs).unwrap();
            prop_assert!((shuffled.jaccard - r.jaccard).abs() < 1e-12);
            prop_assert_eq!(shuffled.per_class_f1, r.per_class_f1);
            prop_assert_eq!(shuffled.avg_accuracy, r.avg_accuracy);
            prop_assert_eq!(shuffled.confusion, r.confusion);
        }

        #[test]
        fn macro_f1_ignores_label_permutation(
            rows in proptest::collection::vec((bits(), bits()), 1..30),
            seed in any::<u64>(),
        ) {
            let mut perm: Vec<usize> = (0..11).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rand::seq::SliceRandom::shuffle(&mut perm[..], &mut rng);
            let permute = |b: &[bool; 11]| LabelVector::from_bits(std::array::from_fn(|k| b[perm[k]]));
            let p: Vec<LabelVector> = rows.iter().map(|r| LabelVector::from_bits(r.0)).collect();
            let g: Vec<LabelVector> = rows.iter().map(|r| LabelVector::from_bits(r.1)).collect();
            let pp: Vec<LabelVector> = rows.iter().map(|r| permute(&r.0)).collect();
            let gp: Vec<LabelVector> = rows.iter().map(|r| permute(&r.1)).collect();
            let a = evaluate_vectors(&p, &g).unwrap();
            let b = evaluate_vectors(&pp, &gp).unwrap();
            prop_assert!((a.macro_f1 - b.macro_f1).abs() < 1e-12);
            prop_assert!((a.avg_accuracy - b.avg_accuracy).abs() < 1e-12);
            prop_assert!((a.jaccard - b.jaccard).abs() < 1e-12);
        }
    }
}
