//! Pool scoring and batch selection.
//!
//! `Allsh` scores an unlabeled example by how far the model's prediction
//! moves under local augmentation: `D(p(·|x), p(·|x'))`. With `worst_case`
//! the score is the maximum over `K` copies, otherwise the single copy 0.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::augment::{AugmentError, AugmentationPolicy, Augmenter, DEFAULT_K};
use crate::corpus::{featurize, FeatureVector, PoolState, TokenizedExample};
use crate::divergence::{divergence, entropy, DivergenceError, DivergenceKind};
use crate::model::{ModelError, ModelParams};
use crate::rng::{rng_from, stream};

#[derive(Debug, Error)]
pub enum AcquisitionError {
    #[error("the unlabeled pool is empty")]
    EmptyPool,
    #[error("the model has not been trained")]
    UntrainedModel,
    #[error("lmax over an empty list")]
    EmptyList,
    #[error("unknown strategy {0:?}")]
    UnknownStrategy(String),
    #[error("K must be at least 1")]
    ZeroCopies,
    #[error(transparent)]
    Augment(#[from] AugmentError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Divergence(#[from] DivergenceError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum Strategy {
    Random,
    Entropy,
    Allsh {
        divergence: DivergenceKind,
        policy: AugmentationPolicy,
        k: usize,
        worst_case: bool,
    },
}

impl Strategy {
    pub fn allsh(worst_case: bool) -> Self {
        Self::Allsh {
            divergence: DivergenceKind::Kl,
            policy: AugmentationPolicy::default(),
            k: DEFAULT_K,
            worst_case,
        }
    }

    /// Number of copies actually generated per example.
    pub fn copies(&self) -> usize {
        match self {
            Self::Allsh { k, worst_case: true, .. } => *k,
            Self::Allsh { .. } => 1,
            _ => 0,
        }
    }

    pub fn validate(&self) -> Result<(), AcquisitionError> {
        if let Self::Allsh { divergence, policy, k, .. } = self {
            if *k == 0 {
                return Err(AcquisitionError::ZeroCopies);
            }
            policy.validate()?;
            if let DivergenceKind::Alpha { alpha } = divergence {
                DivergenceKind::alpha(*alpha)?;
            }
        }
        Ok(())
    }

    /// Parses `random`, `entropy`, `allsh` or `allsh-wca`, optionally with a
    /// divergence suffix (`:kl`, `:jsd`, `:alpha=<a>`). Augmentation
    /// settings come from `policy` and `k`.
    pub fn parse_with(s: &str, policy: AugmentationPolicy, k: usize) -> Result<Self, AcquisitionError> {
        let unknown = || AcquisitionError::UnknownStrategy(s.to_owned());
        let (head, div) = match s.split_once(':') {
            Some((h, d)) => (h, Some(d)),
            None => (s, None),
        };
        let divergence = match div {
            None | Some("kl") => DivergenceKind::Kl,
            Some("jsd") => DivergenceKind::Jsd,
            Some(d) => {
                let a = d.strip_prefix("alpha=").ok_or_else(unknown)?;
                DivergenceKind::alpha(a.parse().map_err(|_| unknown())?)?
            }
        };
        match (head, div) {
            ("random", None) => Ok(Self::Random),
            ("entropy", None) => Ok(Self::Entropy),
            ("allsh", _) => Ok(Self::Allsh { divergence, policy, k, worst_case: false }),
            ("allsh-wca", _) => Ok(Self::Allsh { divergence, policy, k, worst_case: true }),
            _ => Err(unknown()),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Random => f.write_str("random"),
            Self::Entropy => f.write_str("entropy"),
            Self::Allsh { divergence, worst_case, .. } => {
                f.write_str(if *worst_case { "allsh-wca" } else { "allsh" })?;
                match divergence {
                    DivergenceKind::Kl => Ok(()),
                    d => write!(f, ":{}", d.label()),
                }
            }
        }
    }
}

impl FromStr for Strategy {
    type Err = AcquisitionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse_with(s, AugmentationPolicy::default(), DEFAULT_K)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionScore {
    pub example_id: usize,
    pub score: f64,
    /// Divergence per augmented copy; empty for non-augmenting strategies.
    pub per_copy: Vec<f64>,
}

/// Largest element.
pub fn lmax_score(per_copy: &[f64]) -> Result<f64, AcquisitionError> {
    per_copy
        .iter()
        .copied()
        .reduce(f64::max)
        .ok_or(AcquisitionError::EmptyList)
}

/// Training-side view of the pool: tokenized examples and their features,
/// both indexed by example id.
#[derive(Debug, Clone, Copy)]
pub struct PoolData<'a> {
    pub examples: &'a [TokenizedExample],
    pub features: &'a [FeatureVector],
}

/// Scores every unlabeled example. Output is ordered by ascending id no
/// matter how the work is scheduled.
pub fn score_pool(
    strategy: &Strategy,
    params: &ModelParams,
    pool: &PoolState,
    data: PoolData<'_>,
    augmenter: &Augmenter<'_>,
    seed: u64,
) -> Result<Vec<AcquisitionScore>, AcquisitionError> {
    if pool.unlabeled().is_empty() {
        return Err(AcquisitionError::EmptyPool);
    }
    if !matches!(strategy, Strategy::Random) && !params.is_fitted() {
        return Err(AcquisitionError::UntrainedModel);
    }
    strategy.validate()?;
    let ids: Vec<usize> = pool.unlabeled().iter().copied().collect();
    ids.par_iter()
        .map(|&id| score_one(strategy, params, data, augmenter, seed, id))
        .collect()
}

fn score_one(
    strategy: &Strategy,
    params: &ModelParams,
    data: PoolData<'_>,
    augmenter: &Augmenter<'_>,
    seed: u64,
    id: usize,
) -> Result<AcquisitionScore, AcquisitionError> {
    let (score, per_copy) = match strategy {
        Strategy::Random => {
            let mut rng = rng_from(seed, &[stream::SCORE_RANDOM, id as u64]);
            (rng.random::<f64>(), Vec::new())
        }
        Strategy::Entropy => (entropy(&params.predict_proba(&data.features[id])?), Vec::new()),
        Strategy::Allsh { divergence: kind, policy, worst_case, .. } => {
            let p = params.predict_proba(&data.features[id])?;
            let set = augmenter.generate_k(&data.examples[id], policy, strategy.copies(), seed)?;
            let per_copy = set
                .copies
                .iter()
                .map(|c| {
                    let q = params.predict_proba(&featurize(&c.tokens, augmenter.stats()))?;
                    Ok(divergence(*kind, &p, &q)?)
                })
                .collect::<Result<Vec<f64>, AcquisitionError>>()?;
            let score = if *worst_case { lmax_score(&per_copy)? } else { per_copy[0] };
            (score, per_copy)
        }
    };
    Ok(AcquisitionScore { example_id: id, score, per_copy })
}

/// Descending score, ascending id on ties.
pub fn rank_order(a: &AcquisitionScore, b: &AcquisitionScore) -> Ordering {
    b.score.total_cmp(&a.score).then(a.example_id.cmp(&b.example_id))
}

/// The `min(s_acq, |scores|)` best ids, ordered by [`rank_order`].
pub fn select_top(scores: &[AcquisitionScore], s_acq: usize) -> Vec<usize> {
    let take = s_acq.min(scores.len());
    if take == 0 {
        return Vec::new();
    }
    let mut refs: Vec<&AcquisitionScore> = scores.iter().collect();
    if take < refs.len() {
        refs.select_nth_unstable_by(take - 1, |a, b| rank_order(a, b));
        refs.truncate(take);
    }
    refs.sort_unstable_by(|a, b| rank_order(a, b));
    refs.into_iter().map(|s| s.example_id).collect()
}

/// Runs `f` on a dedicated pool of `threads` workers, or on the global pool
/// when `threads` is `None`. Falls back to the caller's thread if a pool
/// cannot be built (e.g. on targets without threads).
pub fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    match threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        None => f(),
    }
}
