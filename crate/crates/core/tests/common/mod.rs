#![allow(dead_code)]

pub mod dd;
pub mod checks;
pub mod fixture;
pub mod grad;

use allab::corpus::{build_stats, featurize, tokenize, CorpusStats, FeatureVector, TokenizedExample};
use rand::Rng;

/// Uniform draw from the simplex (flat Dirichlet) via normalized exponentials.
pub fn random_simplex<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

pub fn examples(texts: &[&str]) -> Vec<TokenizedExample> {
    texts
        .iter()
        .enumerate()
        .map(|(id, t)| TokenizedExample { id, tokens: tokenize(t), label: id % 2 })
        .collect()
}

pub fn stats_and_features(ex: &[TokenizedExample]) -> (CorpusStats, Vec<FeatureVector>) {
    let stats = build_stats(ex).unwrap();
    let feats = ex.iter().map(|e| featurize(&e.tokens, &stats)).collect();
    (stats, feats)
}
