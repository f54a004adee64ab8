//! Multinomial logistic regression over sparse TF-IDF features, trained by
//! mini-batch gradient descent on cross-entropy plus an optional
//! consistency penalty `ssl_alpha · mean KL(p(·|x) ‖ p(·|x'))` over
//! unlabeled pairs.

use std::fs;
use std::path::Path;

use rand::seq::index;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::FeatureVector;
use crate::divergence::ProbDist;
use crate::rng::{rng_from, stream};

pub const DEFAULT_LEARNING_RATE: f64 = 0.1;
pub const DEFAULT_ITERATIONS: usize = 200;
pub const DEFAULT_BATCH_SIZE: usize = 16;
pub const DEFAULT_SSL_ALPHA: f64 = 0.01;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("feature index {index} outside model dimension {dim}")]
    DimensionMismatch { index: usize, dim: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error("training needs at least one labeled example")]
    EmptyLabeledSet,
    #[error("label {0} outside the model's classes")]
    LabelOutOfRange(usize),
    #[error("invalid training config: {0}")]
    InvalidConfig(&'static str),
    #[error("non-finite parameters after training step {0}")]
    Diverged(usize),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    num_classes: usize,
    dim: usize,
    /// `num_classes × dim`, row-major.
    w: Vec<f64>,
    b: Vec<f64>,
    fitted: bool,
}

impl ModelParams {
    /// All-zero parameters: the uniform predictor. Marked as not fitted.
    pub fn zeros(num_classes: usize, dim: usize) -> Self {
        Self {
            num_classes,
            dim,
            w: vec![0.0; num_classes * dim],
            b: vec![0.0; num_classes],
            fitted: false,
        }
    }

    /// Explicit parameters; `w` is row-major `num_classes × dim`.
    pub fn from_parts(num_classes: usize, dim: usize, w: Vec<f64>, b: Vec<f64>) -> Result<Self, ModelError> {
        if w.len() != num_classes * dim || b.len() != num_classes || num_classes == 0 {
            return Err(ModelError::Checkpoint(format!(
                "expected {} weights and {} biases, got {} and {}",
                num_classes * dim,
                num_classes,
                w.len(),
                b.len()
            )));
        }
        if w.iter().chain(&b).any(|v| !v.is_finite()) {
            return Err(ModelError::Checkpoint("non-finite parameter".into()));
        }
        Ok(Self { num_classes, dim, w, b, fitted: true })
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn bias(&self) -> &[f64] {
        &self.b
    }

    pub fn is_fitted(&self) -> bool {
        self.fitted
    }

    pub fn is_finite(&self) -> bool {
        self.w.iter().chain(&self.b).all(|v| v.is_finite())
    }

    fn check_dim(&self, x: &FeatureVector) -> Result<(), ModelError> {
        match x.max_index() {
            Some(i) if i >= self.dim => Err(ModelError::DimensionMismatch { index: i, dim: self.dim }),
            _ => Ok(()),
        }
    }

    pub fn logits(&self, x: &FeatureVector) -> Result<Vec<f64>, ModelError> {
        self.check_dim(x)?;
        Ok(self.logits_unchecked(x))
    }

    fn logits_unchecked(&self, x: &FeatureVector) -> Vec<f64> {
        (0..self.num_classes)
            .map(|c| {
                let row = &self.w[c * self.dim..(c + 1) * self.dim];
                self.b[c] + x.entries.iter().map(|&(i, v)| row[i] * v).sum::<f64>()
            })
            .collect()
    }

    /// `softmax(Wx + b)`.
    pub fn predict_proba(&self, x: &FeatureVector) -> Result<ProbDist, ModelError> {
        let z = self.logits(x)?;
        Ok(ProbDist::clamped(softmax(&z)))
    }

    /// Flat view `[W row-major, b]`, used by checkpoints and gradient checks.
    pub fn to_flat(&self) -> Vec<f64> {
        self.w.iter().chain(&self.b).copied().collect()
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        let (w, b) = flat.split_at(self.w.len());
        self.w.copy_from_slice(w);
        self.b.copy_from_slice(b);
    }

    fn step(&mut self, grad: &Gradient, scale: f64) {
        for (p, g) in self.w.iter_mut().zip(&grad.w) {
            *p -= scale * g;
        }
        for (p, g) in self.b.iter_mut().zip(&grad.b) {
            *p -= scale * g;
        }
    }
}

/// Max-subtracted softmax.
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

fn log_softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
    z.iter().map(|v| v - lse).collect()
}

/// Gradient with the same layout as [`ModelParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl Gradient {
    fn zeros(params: &ModelParams) -> Self {
        Self {
            w: vec![0.0; params.w.len()],
            b: vec![0.0; params.b.len()],
        }
    }

    /// Adds `dlogits ⊗ x` for one example.
    fn accumulate(&mut self, dim: usize, dlogits: &[f64], x: &FeatureVector, scale: f64) {
        for (c, &g) in dlogits.iter().enumerate() {
            let g = g * scale;
            self.b[c] += g;
            let row = &mut self.w[c * dim..(c + 1) * dim];
            for &(i, v) in &x.entries {
                row[i] += g * v;
            }
        }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.w.iter().chain(&self.b).copied().collect()
    }

    fn add_scaled(&mut self, other: &Gradient, scale: f64) {
        for (a, b) in self.w.iter_mut().zip(&other.w) {
            *a += scale * b;
        }
        for (a, b) in self.b.iter_mut().zip(&other.b) {
            *a += scale * b;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct LossBreakdown {
    pub supervised: f64,
    pub consistency: f64,
    pub total: f64,
}

/// Mean cross-entropy `−ln p(label|x)` and its gradient.
pub fn supervised_loss(
    params: &ModelParams,
    batch: &[(&FeatureVector, usize)],
) -> Result<(f64, Gradient), ModelError> {
    if batch.is_empty() {
        return Err(ModelError::EmptyBatch);
    }
    let mut grad = Gradient::zeros(params);
    let scale = 1.0 / batch.len() as f64;
    let mut loss = 0.0;
    for &(x, y) in batch {
        if y >= params.num_classes {
            return Err(ModelError::LabelOutOfRange(y));
        }
        let z = params.logits(x)?;
        let lp = log_softmax(&z);
        loss -= lp[y];
        let mut d: Vec<f64> = lp.iter().map(|v| v.exp()).collect();
        d[y] -= 1.0;
        grad.accumulate(params.dim, &d, x, scale);
    }
    Ok((loss * scale, grad))
}

/// Mean `KL(p(·|x) ‖ p(·|x'))` over pairs, differentiated through both
/// arguments.
pub fn consistency_loss(
    params: &ModelParams,
    pairs: &[(&FeatureVector, &FeatureVector)],
) -> Result<(f64, Gradient), ModelError> {
    if pairs.is_empty() {
        return Err(ModelError::EmptyBatch);
    }
    let mut grad = Gradient::zeros(params);
    let scale = 1.0 / pairs.len() as f64;
    let mut loss = 0.0;
    for &(x, xa) in pairs {
        let lp = log_softmax(&params.logits(x)?);
        let lq = log_softmax(&params.logits(xa)?);
        let p: Vec<f64> = lp.iter().map(|v| v.exp()).collect();
        let q: Vec<f64> = lq.iter().map(|v| v.exp()).collect();
        let diff: Vec<f64> = lp.iter().zip(&lq).map(|(a, b)| a - b).collect();
        let kl: f64 = p.iter().zip(&diff).map(|(a, d)| a * d).sum();
        loss += kl;
        // d/dz_j = p_j (d_j − KL),  d/dz'_j = q_j − p_j
        let dz: Vec<f64> = p.iter().zip(&diff).map(|(pj, dj)| pj * (dj - kl)).collect();
        let dza: Vec<f64> = q.iter().zip(&p).map(|(qj, pj)| qj - pj).collect();
        grad.accumulate(params.dim, &dz, x, scale);
        grad.accumulate(params.dim, &dza, xa, scale);
    }
    Ok((loss * scale, grad))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub iterations: usize,
    pub batch_size: usize,
    /// Weight of the consistency term; 0 turns it off.
    pub ssl_alpha: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: DEFAULT_LEARNING_RATE,
            iterations: DEFAULT_ITERATIONS,
            batch_size: DEFAULT_BATCH_SIZE,
            ssl_alpha: DEFAULT_SSL_ALPHA,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(ModelError::InvalidConfig("learning_rate must be positive"));
        }
        if self.iterations == 0 {
            return Err(ModelError::InvalidConfig("iterations must be positive"));
        }
        if self.batch_size == 0 {
            return Err(ModelError::InvalidConfig("batch_size must be positive"));
        }
        if !(self.ssl_alpha >= 0.0 && self.ssl_alpha.is_finite()) {
            return Err(ModelError::InvalidConfig("ssl_alpha must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub params: ModelParams,
    /// Loss on the batch seen at each step, measured before the update.
    pub history: Vec<LossBreakdown>,
}

impl FitOutcome {
    pub fn last_loss(&self) -> LossBreakdown {
        self.history.last().copied().unwrap_or_default()
    }
}

/// Trains from zero-initialized parameters.
pub fn fit(
    labeled: &[(&FeatureVector, usize)],
    unlabeled_pairs: &[(&FeatureVector, &FeatureVector)],
    num_classes: usize,
    dim: usize,
    config: &TrainConfig,
) -> Result<FitOutcome, ModelError> {
    config.validate()?;
    if labeled.is_empty() {
        return Err(ModelError::EmptyLabeledSet);
    }
    let mut params = ModelParams::zeros(num_classes, dim);
    let use_consistency = config.ssl_alpha > 0.0 && !unlabeled_pairs.is_empty();
    let mut rng = rng_from(config.seed, &[stream::FIT]);
    let mut history = Vec::with_capacity(config.iterations);
    let mut batch = Vec::with_capacity(config.batch_size);
    let mut pair_batch = Vec::with_capacity(config.batch_size);

    for step in 0..config.iterations {
        batch.clear();
        if config.batch_size >= labeled.len() {
            batch.extend_from_slice(labeled);
        } else {
            batch.extend(index::sample(&mut rng, labeled.len(), config.batch_size).into_iter().map(|i| labeled[i]));
        }
        let (sup, mut grad) = supervised_loss(&params, &batch)?;

        let mut cons = 0.0;
        if use_consistency {
            pair_batch.clear();
            if config.batch_size >= unlabeled_pairs.len() {
                pair_batch.extend_from_slice(unlabeled_pairs);
            } else {
                pair_batch.extend(
                    index::sample(&mut rng, unlabeled_pairs.len(), config.batch_size)
                        .into_iter()
                        .map(|i| unlabeled_pairs[i]),
                );
            }
            let (c, g) = consistency_loss(&params, &pair_batch)?;
            cons = c;
            grad.add_scaled(&g, config.ssl_alpha);
        }
        history.push(LossBreakdown {
            supervised: sup,
            consistency: cons,
            total: sup + config.ssl_alpha * cons,
        });
        params.step(&grad, config.learning_rate);
        if !params.is_finite() {
            return Err(ModelError::Diverged(step));
        }
    }
    params.fitted = true;
    Ok(FitOutcome { params, history })
}

/// Checkpoint layout: a header with dimensions and one flat array holding
/// `W` row-major followed by `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub num_classes: usize,
    pub dim: usize,
    pub values: Vec<f64>,
}

pub const CHECKPOINT_FORMAT: &str = "allab-logreg-v1";

impl Checkpoint {
    pub fn from_params(params: &ModelParams) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.into(),
            num_classes: params.num_classes,
            dim: params.dim,
            values: params.to_flat(),
        }
    }

    pub fn into_params(self) -> Result<ModelParams, ModelError> {
        if self.format != CHECKPOINT_FORMAT {
            return Err(ModelError::Checkpoint(format!("unknown format {:?}", self.format)));
        }
        let split = self.num_classes * self.dim;
        if self.values.len() != split + self.num_classes {
            return Err(ModelError::Checkpoint("value count does not match header".into()));
        }
        let mut w = self.values;
        let b = w.split_off(split);
        ModelParams::from_parts(self.num_classes, self.dim, w, b)
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        let mut s = serde_json::to_string(self).map_err(|e| ModelError::Checkpoint(e.to_string()))?;
        s.push('\n');
        fs::write(path, s).map_err(|e| ModelError::Checkpoint(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let s = fs::read_to_string(path).map_err(|e| ModelError::Checkpoint(e.to_string()))?;
        serde_json::from_str(&s).map_err(|e| ModelError::Checkpoint(e.to_string()))
    }
}
