//! Local paraphrase generation.
//!
//! Two policies: TF-IDF guided word replacement, and word dropout as a
//! cheap label-preserving stand-in for translation round trips. Copy `i`
//! of example `id` is drawn from its own generator keyed by
//! `(global_seed, id, i)`, so copy sets are reproducible, nested in `K`,
//! and independent of the order in which a pool is processed.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{CorpusStats, TokenizedExample};
use crate::rng::{derive_seed, stream, LabRng};
use rand::SeedableRng;

pub const DEFAULT_P_AUG: f64 = 0.3;
pub const DEFAULT_K: usize = 4;
pub const DEFAULT_DROP_PROB: f64 = 0.1;

#[derive(Debug, Error, PartialEq)]
pub enum AugmentError {
    #[error("cannot augment an empty sentence")]
    EmptySentence,
    #[error("K must be at least 1")]
    ZeroCopies,
    #[error("augmentation parameter out of range: {0}")]
    InvalidParameter(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AugmentationKind {
    #[default]
    TfIdfReplace,
    WordDropout,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentationPolicy {
    pub kind: AugmentationKind,
    /// Replacement magnitude for TF-IDF replacement.
    pub p_aug: f64,
    /// Per-token deletion probability for dropout.
    pub drop_prob: f64,
}

impl Default for AugmentationPolicy {
    fn default() -> Self {
        Self {
            kind: AugmentationKind::TfIdfReplace,
            p_aug: DEFAULT_P_AUG,
            drop_prob: DEFAULT_DROP_PROB,
        }
    }
}

impl AugmentationPolicy {
    pub fn validate(&self) -> Result<(), AugmentError> {
        match self.kind {
            AugmentationKind::TfIdfReplace if !(self.p_aug > 0.0 && self.p_aug <= 1.0) => {
                Err(AugmentError::InvalidParameter("p_aug must be in (0, 1]"))
            }
            AugmentationKind::WordDropout if !(0.0..1.0).contains(&self.drop_prob) => {
                Err(AugmentError::InvalidParameter("drop_prob must be in [0, 1)"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentedSet {
    pub original_id: usize,
    pub copies: Vec<TokenizedExample>,
    /// Seed each copy was generated from.
    pub copy_seeds: Vec<u64>,
}

/// Replacement probability for every token of a sentence given its
/// TF-IDF scores: `min(p_aug · (C − s_i) / Z, 1)` with `C` the max and `Z`
/// the mean score. `None` when every score is zero.
pub fn replacement_probs(scores: &[f64], p_aug: f64) -> Option<Vec<f64>> {
    if scores.is_empty() {
        return None;
    }
    let c = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let z = scores.iter().sum::<f64>() / scores.len() as f64;
    if z <= 0.0 {
        return None;
    }
    Some(scores.iter().map(|&s| (p_aug * (c - s) / z).min(1.0)).collect())
}

/// Samples replacement words with probability proportional to
/// `S_max − corpus_score(w)`, so uninformative words are preferred.
#[derive(Debug, Clone)]
pub struct ReplacementSampler {
    weights: Option<WeightedIndex<f64>>,
    vocab_len: usize,
}

impl ReplacementSampler {
    pub fn new(stats: &CorpusStats) -> Self {
        let s_max = stats.max_corpus_score();
        let w: Vec<f64> = stats.corpus_score.iter().map(|s| (s_max - s).max(0.0)).collect();
        Self {
            // All-equal scores leave nothing to weight; fall back to uniform.
            weights: WeightedIndex::new(&w).ok(),
            vocab_len: stats.dim(),
        }
    }

    /// Draws a vocabulary index other than `exclude`. `None` if the
    /// vocabulary has no other word.
    pub fn sample(&self, rng: &mut LabRng, exclude: Option<usize>) -> Option<usize> {
        let others = self.vocab_len - usize::from(exclude.is_some_and(|e| e < self.vocab_len));
        if others == 0 {
            return None;
        }
        if let Some(w) = &self.weights {
            // Rejection keeps the conditional distribution exact. Bail out to
            // uniform if the excluded word carries nearly all the mass.
            for _ in 0..64 {
                let i = w.sample(rng);
                if Some(i) != exclude {
                    return Some(i);
                }
            }
        }
        loop {
            let i = rng.random_range(0..self.vocab_len);
            if Some(i) != exclude {
                return Some(i);
            }
        }
    }
}

/// Holds the per-corpus precomputation for TF-IDF replacement.
#[derive(Debug, Clone)]
pub struct Augmenter<'a> {
    stats: &'a CorpusStats,
    sampler: ReplacementSampler,
}

impl<'a> Augmenter<'a> {
    pub fn new(stats: &'a CorpusStats) -> Self {
        Self {
            stats,
            sampler: ReplacementSampler::new(stats),
        }
    }

    pub fn stats(&self) -> &CorpusStats {
        self.stats
    }

    pub fn tfidf_replace(
        &self,
        ex: &TokenizedExample,
        p_aug: f64,
        rng: &mut LabRng,
    ) -> Result<TokenizedExample, AugmentError> {
        if ex.tokens.is_empty() {
            return Err(AugmentError::EmptySentence);
        }
        let scores = self.stats.sentence_scores(&ex.tokens);
        let Some(probs) = replacement_probs(&scores, p_aug) else {
            return Ok(ex.clone());
        };
        let tokens = ex
            .tokens
            .iter()
            .zip(&probs)
            .map(|(tok, &r)| {
                let u: f64 = rng.random();
                if u < r {
                    let own = self.stats.vocab.get(tok);
                    if let Some(w) = self.sampler.sample(rng, own) {
                        return self.stats.vocab.token(w).to_owned();
                    }
                }
                tok.clone()
            })
            .collect();
        Ok(TokenizedExample {
            tokens,
            ..ex.clone()
        })
    }

    pub fn apply(
        &self,
        ex: &TokenizedExample,
        policy: &AugmentationPolicy,
        rng: &mut LabRng,
    ) -> Result<TokenizedExample, AugmentError> {
        match policy.kind {
            AugmentationKind::TfIdfReplace => self.tfidf_replace(ex, policy.p_aug, rng),
            AugmentationKind::WordDropout => word_dropout_with(ex, policy.drop_prob, rng),
        }
    }

    /// Seed of copy `i` of example `id`.
    pub fn copy_seed(global_seed: u64, id: usize, i: usize) -> u64 {
        derive_seed(global_seed, &[stream::AUGMENT, id as u64, i as u64])
    }

    pub fn generate_k(
        &self,
        ex: &TokenizedExample,
        policy: &AugmentationPolicy,
        k: usize,
        global_seed: u64,
    ) -> Result<AugmentedSet, AugmentError> {
        if k == 0 {
            return Err(AugmentError::ZeroCopies);
        }
        let mut copies = Vec::with_capacity(k);
        let mut copy_seeds = Vec::with_capacity(k);
        for i in 0..k {
            let seed = Self::copy_seed(global_seed, ex.id, i);
            let mut rng = LabRng::seed_from_u64(seed);
            copies.push(self.apply(ex, policy, &mut rng)?);
            copy_seeds.push(seed);
        }
        Ok(AugmentedSet {
            original_id: ex.id,
            copies,
            copy_seeds,
        })
    }
}

/// One-shot TF-IDF replacement. Prefer [`Augmenter`] when augmenting many
/// sentences against the same statistics.
pub fn tfidf_replace(
    ex: &TokenizedExample,
    stats: &CorpusStats,
    p_aug: f64,
    seed: u64,
) -> Result<TokenizedExample, AugmentError> {
    Augmenter::new(stats).tfidf_replace(ex, p_aug, &mut LabRng::seed_from_u64(seed))
}

pub fn word_dropout(
    ex: &TokenizedExample,
    drop_prob: f64,
    seed: u64,
) -> Result<TokenizedExample, AugmentError> {
    word_dropout_with(ex, drop_prob, &mut LabRng::seed_from_u64(seed))
}

fn word_dropout_with(
    ex: &TokenizedExample,
    drop_prob: f64,
    rng: &mut LabRng,
) -> Result<TokenizedExample, AugmentError> {
    if ex.tokens.is_empty() {
        return Err(AugmentError::EmptySentence);
    }
    let mut tokens: Vec<String> = ex
        .tokens
        .iter()
        .filter(|_| rng.random::<f64>() >= drop_prob)
        .cloned()
        .collect();
    if tokens.is_empty() {
        tokens.push(ex.tokens.last().cloned().unwrap());
    }
    Ok(TokenizedExample {
        tokens,
        ..ex.clone()
    })
}

pub fn generate_k(
    ex: &TokenizedExample,
    stats: &CorpusStats,
    policy: &AugmentationPolicy,
    k: usize,
    global_seed: u64,
) -> Result<AugmentedSet, AugmentError> {
    Augmenter::new(stats).generate_k(ex, policy, k, global_seed)
}
