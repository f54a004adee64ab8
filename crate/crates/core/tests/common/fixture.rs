//! A small trained model over a synthetic pool.

use allab::corpus::{build_stats, featurize, initial_seed_split, tokenize_all, CorpusStats, FeatureVector, PoolState, TokenizedExample};
use allab::model::{fit, ModelParams, TrainConfig};
use allab::rng::stream;
use allab::synthetic::{generate, SyntheticSpec};

pub struct Fixture {
    pub examples: Vec<TokenizedExample>,
    pub features: Vec<FeatureVector>,
    pub stats: CorpusStats,
    pub params: ModelParams,
    pub pool: PoolState,
}

pub fn trained_pool(n: usize, seed: u64) -> Fixture {
    let spec = SyntheticSpec {
        num_examples: n,
        vocab_size: 300,
        tokens_per_doc: 20,
        class_separation: 0.3,
        ..Default::default()
    };
    let examples = tokenize_all(&generate(&spec, seed, stream::SYNTH_TRAIN).unwrap());
    let stats = build_stats(&examples).unwrap();
    let features: Vec<FeatureVector> = examples.iter().map(|e| featurize(&e.tokens, &stats)).collect();
    let pool = initial_seed_split(n, 0.1, seed).unwrap();
    let labeled: Vec<_> = pool.labeled().iter().map(|&i| (&features[i], examples[i].label)).collect();
    let cfg = TrainConfig { learning_rate: 2.0, iterations: 100, seed, ..Default::default() };
    let params = fit(&labeled, &[], 2, stats.dim(), &cfg).unwrap().params;
    Fixture { examples, features, stats, params, pool }
}
