//! One-vs-rest linear SVM trained by dual coordinate descent on the hinge
//! loss.
//!
//! Per label the solver maximizes
//! `D(a) = sum_i a_i - 1/2 |sum_i a_i y_i x~_i|^2` subject to `0 <= a_i <= C_i`,
//! where `x~ = [x, 1]` folds a regularized bias into the weights. One
//! coordinate is optimized exactly at a time and `w` is kept in sync
//! incrementally, so every step can only raise `D`.
//!
//! A coordinate is touched only when its projected gradient exceeds the
//! tolerance, which makes a sweep with no updates a certificate that the
//! KKT conditions hold to that tolerance at the returned weights.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_uniform_dim, logistic, ModelError};
use crate::corpus::{PredictionMatrix, DEFAULT_THRESHOLD};
use crate::features::FeatureVector;
use crate::labels::{LabelVector, NUM_LABELS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmConfig {
    /// Box constraint on the dual variables.
    pub c: f64,
    /// Stop once the largest projected-gradient violation in a sweep is at
    /// most this.
    pub tolerance: f64,
    pub max_sweeps: usize,
    pub seed: u64,
    pub shuffle_each_sweep: bool,
    /// Multiplies `c` for positive examples of each label.
    pub positive_class_weight: [f64; NUM_LABELS],
    /// Slope `a` of the logistic squashing of margins into scores.
    pub sigmoid_scale: f64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            c: 1.0,
            tolerance: 1e-3,
            max_sweeps: 1000,
            seed: 0,
            shuffle_each_sweep: true,
            positive_class_weight: [1.0; NUM_LABELS],
            sigmoid_scale: 1.0,
        }
    }
}

impl SvmConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.c) {
            return Err(ModelError::InvalidConfig(format!("C must be positive, got {}", self.c)));
        }
        if !positive(self.tolerance) {
            return Err(ModelError::InvalidConfig(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_sweeps == 0 {
            return Err(ModelError::InvalidConfig("max_sweeps must be at least 1".into()));
        }
        if !self.positive_class_weight.iter().all(|w| positive(*w)) {
            return Err(ModelError::InvalidConfig(
                "positive_class_weight entries must be positive".into(),
            ));
        }
        if !positive(self.sigmoid_scale) {
            return Err(ModelError::InvalidConfig("sigmoid_scale must be positive".into()));
        }
        Ok(())
    }
}

/// Eleven independent linear scorers over one feature space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiLabelLinearModel {
    dim: usize,
    weights: Vec<Vec<f64>>,
    biases: [f64; NUM_LABELS],
    sigmoid_scale: f64,
    config: SvmConfig,
}

impl MultiLabelLinearModel {
    pub fn from_parts(
        weights: Vec<Vec<f64>>,
        biases: [f64; NUM_LABELS],
        sigmoid_scale: f64,
    ) -> Result<Self, ModelError> {
        if weights.len() != NUM_LABELS {
            return Err(ModelError::InvalidConfig(format!(
                "expected {NUM_LABELS} weight vectors, got {}",
                weights.len()
            )));
        }
        let dim = weights[0].len();
        if let Some(w) = weights.iter().find(|w| w.len() != dim) {
            return Err(ModelError::DimensionMismatch {
                expected: dim,
                found: w.len(),
            });
        }
        if weights.iter().flatten().chain(biases.iter()).any(|v| !v.is_finite()) {
            return Err(ModelError::InvalidConfig("non-finite parameter".into()));
        }
        Ok(MultiLabelLinearModel {
            dim,
            weights,
            biases,
            sigmoid_scale,
            config: SvmConfig {
                sigmoid_scale,
                ..SvmConfig::default()
            },
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weights(&self, label: usize) -> &[f64] {
        &self.weights[label]
    }

    pub fn bias(&self, label: usize) -> f64 {
        self.biases[label]
    }

    pub fn config(&self) -> &SvmConfig {
        &self.config
    }

    pub fn margins(&self, x: &FeatureVector) -> Result<[f64; NUM_LABELS], ModelError> {
        if x.dim() != self.dim {
            return Err(ModelError::DimensionMismatch {
                expected: self.dim,
                found: x.dim(),
            });
        }
        let mut out = [0.0; NUM_LABELS];
        for (k, m) in out.iter_mut().enumerate() {
            *m = x.dot_dense(&self.weights[k]) + self.biases[k];
        }
        Ok(out)
    }

    pub fn probabilities(&self, x: &FeatureVector) -> Result<[f64; NUM_LABELS], ModelError> {
        let mut m = self.margins(x)?;
        for v in m.iter_mut() {
            *v = logistic(self.sigmoid_scale * *v);
        }
        Ok(m)
    }

    /// Scores every row; decisions are `probability > 0.5`, i.e. positive
    /// margin.
    pub fn predict(&self, ids: &[String], xs: &[FeatureVector]) -> Result<PredictionMatrix, ModelError> {
        if ids.len() != xs.len() {
            return Err(ModelError::LengthMismatch {
                what: "ids and feature rows",
                left: ids.len(),
                right: xs.len(),
            });
        }
        let probs = xs
            .par_iter()
            .map(|x| self.probabilities(x))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(PredictionMatrix::new(ids.to_vec(), probs, DEFAULT_THRESHOLD)?)
    }
}

/// Solver diagnostics for one label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelTrace {
    /// Dual objective after each full sweep.
    pub dual_objectives: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
    /// Largest projected-gradient magnitude seen in the last sweep.
    pub final_violation: f64,
    pub alphas: Vec<f64>,
    /// Box bound of each dual variable.
    pub upper_bounds: Vec<f64>,
    /// `+1` / `-1` targets.
    pub targets: Vec<f64>,
}

struct BinaryProblem<'a> {
    xs: &'a [FeatureVector],
    targets: Vec<f64>,
    upper: Vec<f64>,
    diag: Vec<f64>,
}

fn solve_binary(
    problem: &BinaryProblem<'_>,
    dim: usize,
    config: &SvmConfig,
    rng: &mut ChaCha8Rng,
) -> (Vec<f64>, f64, LabelTrace) {
    let n = problem.xs.len();
    let mut alpha = vec![0.0; n];
    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut order: Vec<usize> = (0..n).collect();
    let mut objectives = Vec::new();
    let mut converged = false;
    let mut violation = f64::INFINITY;
    let mut sweeps = 0;

    while sweeps < config.max_sweeps {
        if config.shuffle_each_sweep {
            order.shuffle(rng);
        }
        violation = 0.0f64;
        let mut updated = false;
        for &i in &order {
            let x = &problem.xs[i];
            let y = problem.targets[i];
            let u = problem.upper[i];
            let g = y * (x.dot_dense(&w) + b) - 1.0;
            let pg = if alpha[i] <= 0.0 {
                g.min(0.0)
            } else if alpha[i] >= u {
                g.max(0.0)
            } else {
                g
            };
            violation = violation.max(pg.abs());
            if pg.abs() > config.tolerance {
                let new_alpha = (alpha[i] - g / problem.diag[i]).clamp(0.0, u);
                let delta = (new_alpha - alpha[i]) * y;
                if delta != 0.0 {
                    x.add_scaled_to(&mut w, delta);
                    b += delta;
                    updated = true;
                }
                alpha[i] = new_alpha;
            }
        }
        sweeps += 1;
        objectives.push(dual_objective(&alpha, &w, b));
        if !updated {
            converged = true;
            break;
        }
    }

    let trace = LabelTrace {
        dual_objectives: objectives,
        sweeps,
        converged,
        final_violation: violation,
        alphas: alpha,
        upper_bounds: problem.upper.clone(),
        targets: problem.targets.clone(),
    };
    (w, b, trace)
}

fn dual_objective(alpha: &[f64], w: &[f64], b: f64) -> f64 {
    let sum_alpha: f64 = alpha.iter().sum();
    let w_sq: f64 = w.iter().map(|v| v * v).sum::<f64>() + b * b;
    sum_alpha - 0.5 * w_sq
}

fn label_rng(seed: u64, label: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(label as u64 + 1);
    rng
}

/// Trains all eleven binary problems and returns the solver traces.
pub fn train_svm_ovr_traced(
    xs: &[FeatureVector],
    ys: &[LabelVector],
    config: &SvmConfig,
) -> Result<(MultiLabelLinearModel, Vec<LabelTrace>), ModelError> {
    config.validate()?;
    if xs.is_empty() {
        return Err(ModelError::EmptyTrainingSet);
    }
    if xs.len() != ys.len() {
        return Err(ModelError::LengthMismatch {
            what: "feature rows and label rows",
            left: xs.len(),
            right: ys.len(),
        });
    }
    let dim = check_uniform_dim(xs)?;
    let diag: Vec<f64> = xs.iter().map(|x| x.squared_norm() + 1.0).collect();

    let solved: Vec<(Vec<f64>, f64, LabelTrace)> = (0..NUM_LABELS)
        .into_par_iter()
        .map(|k| {
            let targets: Vec<f64> = ys
                .iter()
                .map(|y| if y.get_index(k) { 1.0 } else { -1.0 })
                .collect();
            let c_pos = config.c * config.positive_class_weight[k];
            let upper = targets
                .iter()
                .map(|&t| if t > 0.0 { c_pos } else { config.c })
                .collect();
            let problem = BinaryProblem {
                xs,
                targets,
                upper,
                diag: diag.clone(),
            };
            let mut rng = label_rng(config.seed, k);
            solve_binary(&problem, dim, config, &mut rng)
        })
        .collect();

    let mut weights = Vec::with_capacity(NUM_LABELS);
    let mut biases = [0.0; NUM_LABELS];
    let mut traces = Vec::with_capacity(NUM_LABELS);
    for (k, (w, b, trace)) in solved.into_iter().enumerate() {
        if !trace.converged {
            log::warn!(
                "label {k}: dual coordinate descent stopped after {} sweeps with violation {:.3e}",
                trace.sweeps,
                trace.final_violation
            );
        }
        weights.push(w);
        biases[k] = b;
        traces.push(trace);
    }
    let model = MultiLabelLinearModel {
        dim,
        weights,
        biases,
        sigmoid_scale: config.sigmoid_scale,
        config: config.clone(),
    };
    Ok((model, traces))
}

pub fn train_svm_ovr(
    xs: &[FeatureVector],
    ys: &[LabelVector],
    config: &SvmConfig,
) -> Result<MultiLabelLinearModel, ModelError> {
    train_svm_ovr_traced(xs, ys, config).map(|(model, _)| model)
}
