//! Statistical distances between class-probability vectors.
//!
//! All inputs go through [`ProbDist`], which clamps every entry to at least
//! [`PROB_FLOOR`] and renormalizes, so logs and ratios below never see a
//! zero and every returned value is finite.
//!
//! Natural logs everywhere except inside [`jsd`], which uses base 2 so the
//! distance lies in `[0, 1]`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum DivergenceError {
    #[error("distributions have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("alpha-divergence is singular at alpha = {0}")]
    AlphaSingular(f64),
    #[error("invalid probability vector: {0}")]
    InvalidDistribution(&'static str),
}

/// A clamped, normalized probability vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbDist(Vec<f64>);

impl ProbDist {
    /// Accepts a vector that already sums to one (within 1e-6).
    pub fn new(probs: Vec<f64>) -> Result<Self, DivergenceError> {
        let sum = Self::validate(&probs)?;
        if (sum - 1.0).abs() > 1e-6 {
            return Err(DivergenceError::InvalidDistribution("entries do not sum to 1"));
        }
        Ok(Self::clamped(probs))
    }

    /// Normalizes arbitrary non-negative weights.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self, DivergenceError> {
        let sum = Self::validate(&weights)?;
        if sum <= 0.0 {
            return Err(DivergenceError::InvalidDistribution("weights sum to zero"));
        }
        Ok(Self::clamped(weights.into_iter().map(|w| w / sum).collect()))
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    fn validate(v: &[f64]) -> Result<f64, DivergenceError> {
        if v.is_empty() {
            return Err(DivergenceError::InvalidDistribution("empty"));
        }
        if v.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(DivergenceError::InvalidDistribution("negative or non-finite entry"));
        }
        Ok(v.iter().sum())
    }

    /// Caller guarantees `probs` is a valid distribution.
    pub(crate) fn clamped(mut probs: Vec<f64>) -> Self {
        let mut sum = 0.0;
        for p in &mut probs {
            *p = p.clamp(PROB_FLOOR, 1.0);
            sum += *p;
        }
        for p in &mut probs {
            *p /= sum;
        }
        Self(probs)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Index of the largest probability; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.0.iter().enumerate() {
            if p > self.0[best] {
                best = i;
            }
        }
        best
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DivergenceKind {
    #[default]
    Kl,
    Jsd,
    Alpha { alpha: f64 },
}

impl DivergenceKind {
    pub fn alpha(alpha: f64) -> Result<Self, DivergenceError> {
        check_alpha(alpha)?;
        Ok(Self::Alpha { alpha })
    }

    pub fn label(&self) -> String {
        match self {
            Self::Kl => "kl".into(),
            Self::Jsd => "jsd".into(),
            Self::Alpha { alpha } => format!("alpha={alpha}"),
        }
    }
}

fn check_alpha(alpha: f64) -> Result<(), DivergenceError> {
    if alpha == 0.0 || alpha == 1.0 || !alpha.is_finite() {
        Err(DivergenceError::AlphaSingular(alpha))
    } else {
        Ok(())
    }
}

fn same_len(p: &ProbDist, q: &ProbDist) -> Result<(), DivergenceError> {
    if p.len() != q.len() {
        Err(DivergenceError::LengthMismatch(p.len(), q.len()))
    } else {
        Ok(())
    }
}

fn kl_raw(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(&pi, &qi)| pi * (pi / qi).ln()).sum()
}

/// `Σ p_i ln(p_i / q_i)`.
pub fn kl(p: &ProbDist, q: &ProbDist) -> Result<f64, DivergenceError> {
    same_len(p, q)?;
    // Rounding can push the sum a hair below zero for near-identical inputs.
    Ok(kl_raw(p.probs(), q.probs()).max(0.0))
}

/// Jensen-Shannon distance `sqrt(½ (KL(p‖m) + KL(q‖m)))` with base-2 logs.
pub fn jsd(p: &ProbDist, q: &ProbDist) -> Result<f64, DivergenceError> {
    same_len(p, q)?;
    let m: Vec<f64> = p.probs().iter().zip(q.probs()).map(|(a, b)| 0.5 * (a + b)).collect();
    let js = 0.5 * (kl_raw(p.probs(), &m) + kl_raw(q.probs(), &m)) / std::f64::consts::LN_2;
    Ok(js.clamp(0.0, 1.0).sqrt())
}

/// `1/(α(α−1)) Σ [(p_i/q_i)^α − 1]`, summed without weights.
pub fn alpha_div(p: &ProbDist, q: &ProbDist, alpha: f64) -> Result<f64, DivergenceError> {
    check_alpha(alpha)?;
    same_len(p, q)?;
    let sum: f64 = p
        .probs()
        .iter()
        .zip(q.probs())
        .map(|(&pi, &qi)| (pi / qi).powf(alpha) - 1.0)
        .sum();
    Ok(sum / (alpha * (alpha - 1.0)))
}

/// Predictive entropy in nats.
pub fn entropy(p: &ProbDist) -> f64 {
    -p.probs().iter().map(|&pi| pi * pi.ln()).sum::<f64>()
}

pub fn divergence(kind: DivergenceKind, p: &ProbDist, q: &ProbDist) -> Result<f64, DivergenceError> {
    match kind {
        DivergenceKind::Kl => kl(p, q),
        DivergenceKind::Jsd => jsd(p, q),
        DivergenceKind::Alpha { alpha } => alpha_div(p, q, alpha),
    }
}
