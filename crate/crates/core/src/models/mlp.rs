//! Multi-label feed-forward network: rectifier hidden layers, eleven
//! logistic outputs, mean binary cross-entropy summed over labels, Adam
//! updates and patience-based early stopping.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{logistic, ModelError};
use crate::corpus::{PredictionMatrix, DEFAULT_THRESHOLD};
use crate::labels::{LabelVector, NUM_LABELS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpConfig {
    pub input_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Weight on the positive term of each label's cross-entropy.
    pub positive_class_weight: [f64; NUM_LABELS],
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            input_dim: 512,
            hidden_dims: vec![256, 128],
            learning_rate: 1e-3,
            batch_size: 32,
            max_epochs: 50,
            patience: 3,
            seed: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            positive_class_weight: [1.0; NUM_LABELS],
        }
    }
}

impl MlpConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.input_dim == 0 || self.hidden_dims.contains(&0) {
            return Err(ModelError::InvalidConfig("layer sizes must be positive".into()));
        }
        if self.patience == 0 {
            return Err(ModelError::InvalidConfig("patience must be at least 1".into()));
        }
        if self.batch_size == 0 || self.max_epochs == 0 {
            return Err(ModelError::InvalidConfig(
                "batch_size and max_epochs must be positive".into(),
            ));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(ModelError::InvalidConfig("learning_rate must be positive".into()));
        }
        if !self.positive_class_weight.iter().all(|w| w.is_finite() && *w > 0.0) {
            return Err(ModelError::InvalidConfig(
                "positive_class_weight entries must be positive".into(),
            ));
        }
        Ok(())
    }

    /// `[input, hidden..., 11]`
    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = Vec::with_capacity(self.hidden_dims.len() + 2);
        sizes.push(self.input_dim);
        sizes.extend(&self.hidden_dims);
        sizes.push(NUM_LABELS);
        sizes
    }
}

/// Dense layer, `weights` row-major `outputs x inputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Layer {
    inputs: usize,
    outputs: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl Layer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Layer {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    fn forward(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.bias.iter().enumerate().map(|(o, b)| {
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
        }));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub validation_loss: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Improved,
    Continue,
    Stop,
}

/// Stops after `patience` consecutive epochs without a strict improvement
/// of the validation loss.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    patience: usize,
    best_loss: f64,
    best_epoch: usize,
    waited: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        EarlyStopping {
            patience,
            best_loss: f64::INFINITY,
            best_epoch: 0,
            waited: 0,
        }
    }

    /// Feeds the validation loss of 1-based `epoch`.
    pub fn observe(&mut self, epoch: usize, loss: f64) -> StopDecision {
        if loss < self.best_loss {
            self.best_loss = loss;
            self.best_epoch = epoch;
            self.waited = 0;
            StopDecision::Improved
        } else {
            self.waited += 1;
            if self.waited >= self.patience {
                StopDecision::Stop
            } else {
                StopDecision::Continue
            }
        }
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }

    pub fn best_loss(&self) -> f64 {
        self.best_loss
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    config: MlpConfig,
    layers: Vec<Layer>,
    history: Vec<EpochRecord>,
    best_epoch: usize,
}

/// Per-example cross-entropy from a logit, numerically stable.
fn bce_with_logit(z: f64, positive: bool) -> f64 {
    let softplus = z.max(0.0) + (-z.abs()).exp().ln_1p();
    if positive {
        softplus - z
    } else {
        softplus
    }
}

impl MlpModel {
    /// All weights and biases zero.
    pub fn zeros(config: &MlpConfig) -> Result<Self, ModelError> {
        config.validate()?;
        let sizes = config.layer_sizes();
        let layers = sizes.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect();
        Ok(MlpModel {
            config: config.clone(),
            layers,
            history: Vec::new(),
            best_epoch: 0,
        })
    }

    /// He-uniform weights for rectifier layers, Glorot-uniform for the
    /// output layer, zero biases.
    pub fn initialized(config: &MlpConfig) -> Result<Self, ModelError> {
        let mut model = Self::zeros(config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let n_layers = model.layers.len();
        for (i, layer) in model.layers.iter_mut().enumerate() {
            let limit = if i + 1 == n_layers {
                (6.0 / (layer.inputs + layer.outputs) as f64).sqrt()
            } else {
                (6.0 / layer.inputs as f64).sqrt()
            };
            for w in layer.weights.iter_mut() {
                *w = rng.random_range(-limit..limit);
            }
        }
        Ok(model)
    }

    pub fn config(&self) -> &MlpConfig {
        &self.config
    }

    pub fn history(&self) -> &[EpochRecord] {
        &self.history
    }

    /// 1-based epoch whose parameters were kept; 0 if never trained.
    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }

    pub fn input_dim(&self) -> usize {
        self.config.input_dim
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Flattened parameters: per layer, weights then bias.
    pub fn parameters(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.parameter_count());
        for l in &self.layers {
            out.extend(&l.weights);
            out.extend(&l.bias);
        }
        out
    }

    pub fn set_parameters(&mut self, params: &[f64]) -> Result<(), ModelError> {
        if params.len() != self.parameter_count() {
            return Err(ModelError::DimensionMismatch {
                expected: self.parameter_count(),
                found: params.len(),
            });
        }
        let mut pos = 0;
        for l in self.layers.iter_mut() {
            let nw = l.weights.len();
            l.weights.copy_from_slice(&params[pos..pos + nw]);
            pos += nw;
            let nb = l.bias.len();
            l.bias.copy_from_slice(&params[pos..pos + nb]);
            pos += nb;
        }
        Ok(())
    }

    fn check_input(&self, x: &[f64]) -> Result<(), ModelError> {
        if x.len() != self.config.input_dim {
            return Err(ModelError::DimensionMismatch {
                expected: self.config.input_dim,
                found: x.len(),
            });
        }
        Ok(())
    }

    /// Activations of every layer, input first; the last entry holds the
    /// output logits.
    fn forward_all(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut out = Vec::with_capacity(layer.outputs);
            layer.forward(acts.last().unwrap(), &mut out);
            if i < last {
                out.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            acts.push(out);
        }
        acts
    }

    pub fn logits(&self, x: &[f64]) -> Result<[f64; NUM_LABELS], ModelError> {
        self.check_input(x)?;
        let acts = self.forward_all(x);
        let mut out = [0.0; NUM_LABELS];
        out.copy_from_slice(acts.last().unwrap());
        Ok(out)
    }

    pub fn probabilities(&self, x: &[f64]) -> Result<[f64; NUM_LABELS], ModelError> {
        let mut z = self.logits(x)?;
        z.iter_mut().for_each(|v| *v = logistic(*v));
        Ok(z)
    }

    fn sample_loss(&self, logits: &[f64], y: &LabelVector) -> f64 {
        logits
            .iter()
            .enumerate()
            .map(|(k, &z)| {
                let pos = y.get_index(k);
                let w = if pos { self.config.positive_class_weight[k] } else { 1.0 };
                w * bce_with_logit(z, pos)
            })
            .sum()
    }

    /// Mean over rows of the label-summed cross-entropy.
    pub fn loss(&self, xs: &[Vec<f64>], ys: &[LabelVector]) -> Result<f64, ModelError> {
        if xs.is_empty() {
            return Ok(0.0);
        }
        let mut total = 0.0;
        for (x, y) in xs.iter().zip(ys) {
            total += self.sample_loss(&self.logits(x)?, y);
        }
        Ok(total / xs.len() as f64)
    }

    /// Loss over the given rows and its gradient with respect to
    /// [`parameters`](Self::parameters), same layout.
    pub fn loss_and_gradient(
        &self,
        xs: &[&[f64]],
        ys: &[LabelVector],
    ) -> Result<(f64, Vec<f64>), ModelError> {
        let mut grads: Vec<Layer> = self
            .layers
            .iter()
            .map(|l| Layer::zeros(l.inputs, l.outputs))
            .collect();
        let n = xs.len().max(1) as f64;
        let mut total = 0.0;
        for (x, y) in xs.iter().zip(ys) {
            self.check_input(x)?;
            let acts = self.forward_all(x);
            let logits = acts.last().unwrap();
            total += self.sample_loss(logits, y);

            // d loss / d logits
            let mut delta: Vec<f64> = logits
                .iter()
                .enumerate()
                .map(|(k, &z)| {
                    let pos = y.get_index(k);
                    let w = if pos { self.config.positive_class_weight[k] } else { 1.0 };
                    w * (logistic(z) - if pos { 1.0 } else { 0.0 })
                })
                .collect();
            for li in (0..self.layers.len()).rev() {
                let layer = &self.layers[li];
                let input = &acts[li];
                let g = &mut grads[li];
                for o in 0..layer.outputs {
                    let d = delta[o];
                    g.bias[o] += d;
                    let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    for (gw, v) in row.iter_mut().zip(input) {
                        *gw += d * v;
                    }
                }
                if li > 0 {
                    let mut prev = vec![0.0; layer.inputs];
                    for o in 0..layer.outputs {
                        let d = delta[o];
                        let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                        for (p, w) in prev.iter_mut().zip(row) {
                            *p += d * w;
                        }
                    }
                    // rectifier derivative, taken as 0 at 0
                    for (p, a) in prev.iter_mut().zip(input) {
                        if *a <= 0.0 {
                            *p = 0.0;
                        }
                    }
                    delta = prev;
                }
            }
        }
        let mut flat = Vec::with_capacity(self.parameter_count());
        for g in &grads {
            flat.extend(g.weights.iter().map(|v| v / n));
            flat.extend(g.bias.iter().map(|v| v / n));
        }
        Ok((total / n, flat))
    }

    pub fn predict(&self, ids: &[String], xs: &[Vec<f64>]) -> Result<PredictionMatrix, ModelError> {
        if ids.len() != xs.len() {
            return Err(ModelError::LengthMismatch {
                what: "ids and feature rows",
                left: ids.len(),
                right: xs.len(),
            });
        }
        let probs = xs
            .iter()
            .map(|x| self.probabilities(x))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(PredictionMatrix::new(ids.to_vec(), probs, DEFAULT_THRESHOLD)?)
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    step: i32,
}

impl Adam {
    fn new(n: usize) -> Self {
        Adam {
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
        }
    }

    fn update(&mut self, params: &mut [f64], grad: &[f64], config: &MlpConfig) {
        self.step += 1;
        let c1 = 1.0 - config.beta1.powi(self.step);
        let c2 = 1.0 - config.beta2.powi(self.step);
        for i in 0..params.len() {
            self.m[i] = config.beta1 * self.m[i] + (1.0 - config.beta1) * grad[i];
            self.v[i] = config.beta2 * self.v[i] + (1.0 - config.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= config.learning_rate * m_hat / (v_hat.sqrt() + config.epsilon);
        }
    }
}

/// Trains with mini-batch Adam, evaluating the validation loss after each
/// epoch, and returns the parameters of the best validation epoch.
pub fn train_mlp(
    xs: &[Vec<f64>],
    ys: &[LabelVector],
    validation: (&[Vec<f64>], &[LabelVector]),
    config: &MlpConfig,
) -> Result<MlpModel, ModelError> {
    config.validate()?;
    if xs.is_empty() {
        return Err(ModelError::EmptyTrainingSet);
    }
    if xs.len() != ys.len() || validation.0.len() != validation.1.len() {
        return Err(ModelError::LengthMismatch {
            what: "feature rows and label rows",
            left: xs.len() + validation.0.len(),
            right: ys.len() + validation.1.len(),
        });
    }
    if validation.0.is_empty() {
        return Err(ModelError::InvalidConfig("validation set is empty".into()));
    }
    for x in xs.iter().chain(validation.0) {
        if x.len() != config.input_dim {
            return Err(ModelError::DimensionMismatch {
                expected: config.input_dim,
                found: x.len(),
            });
        }
    }

    let mut model = MlpModel::initialized(config)?;
    let mut params = model.parameters();
    let mut adam = Adam::new(params.len());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let mut stopper = EarlyStopping::new(config.patience);
    let mut best_params = params.clone();
    let mut history = Vec::new();

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            let bx: Vec<&[f64]> = batch.iter().map(|&i| xs[i].as_slice()).collect();
            let by: Vec<LabelVector> = batch.iter().map(|&i| ys[i]).collect();
            let (loss, grad) = model.loss_and_gradient(&bx, &by)?;
            if !loss.is_finite() {
                return Err(ModelError::NonFiniteLoss { epoch });
            }
            epoch_loss += loss * batch.len() as f64;
            adam.update(&mut params, &grad, config);
            model.set_parameters(&params)?;
        }
        let train_loss = epoch_loss / xs.len() as f64;
        let validation_loss = model.loss(validation.0, validation.1)?;
        if !validation_loss.is_finite() {
            return Err(ModelError::NonFiniteLoss { epoch });
        }
        history.push(EpochRecord {
            epoch,
            train_loss,
            validation_loss,
        });
        log::debug!("epoch {epoch}: train {train_loss:.5} validation {validation_loss:.5}");
        match stopper.observe(epoch, validation_loss) {
            StopDecision::Improved => best_params.clone_from(&params),
            StopDecision::Continue => {}
            StopDecision::Stop => break,
        }
    }

    model.set_parameters(&best_params)?;
    model.history = history;
    model.best_epoch = stopper.best_epoch();
    Ok(model)
}

pub fn predict_mlp(
    model: &MlpModel,
    ids: &[String],
    xs: &[Vec<f64>],
) -> Result<PredictionMatrix, ModelError> {
    model.predict(ids, xs)
}
