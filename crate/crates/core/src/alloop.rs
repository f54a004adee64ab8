//! The acquisition loop: train on the labeled set, evaluate, score the
//! pool, label the top batch, and repeat until the budget is spent.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::acquisition::{select_top, score_pool, with_threads, AcquisitionError, PoolData, Strategy};
use crate::augment::{AugmentError, Augmenter};
use crate::config::{DataSource, ExperimentConfig};
use crate::corpus::{
    build_stats, featurize, fraction_count, initial_seed_split, load_jsonl, subsample_imbalanced, tokenize_all,
    CorpusError, Document, FeatureVector, PoolState, TokenizedExample,
};
use crate::model::{consistency_loss, fit, supervised_loss, LossBreakdown, ModelError, ModelParams, TrainConfig};
use crate::rng::{derive_seed, stream, LabRng};
use crate::synthetic::{generate, SpecError};
use rand::SeedableRng;

#[derive(Debug, Error)]
pub enum LoopError {
    #[error("invalid config: {}", .0.join("; "))]
    Config(Vec<String>),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Synthetic(#[from] SpecError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Acquisition(#[from] AcquisitionError),
    #[error(transparent)]
    Augment(#[from] AugmentError),
    #[error("per_iteration is 0 but the budget needs more labels")]
    BudgetUnreachable,
    #[error("test set is empty")]
    EmptyTestSet,
    #[error("invariant violated: {0}")]
    Invariant(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Size of the training set the model of this iteration saw.
    pub labeled_count: usize,
    pub labeled_fraction: f64,
    /// Batch chosen by this iteration's model; empty on the last record.
    pub acquired_ids: Vec<usize>,
    pub test_accuracy: f64,
    pub od_accuracy: Option<f64>,
    pub loss: LossBreakdown,
    pub wall_clock_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub final_accuracy: f64,
    pub final_od_accuracy: Option<f64>,
    pub final_labeled_count: usize,
    pub initial_labeled_count: usize,
    pub budget_target: usize,
    pub num_train: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub strategy: String,
    pub seed: u64,
    pub records: Vec<IterationRecord>,
    pub summary: Summary,
}

/// Raw documents of one experiment, before any per-seed processing.
#[derive(Debug, Clone)]
pub struct Datasets {
    pub train: Vec<Document>,
    pub test: Vec<Document>,
    pub od_test: Option<Vec<Document>>,
}

impl Datasets {
    pub fn load(config: &ExperimentConfig) -> Result<Self, LoopError> {
        match &config.data {
            DataSource::Files { train, test, od_test } => Ok(Self {
                train: load_jsonl(train, config.num_classes)?,
                test: load_jsonl(test, config.num_classes)?,
                od_test: od_test.as_deref().map(|p| load_jsonl(p, config.num_classes)).transpose()?,
            }),
            DataSource::Synthetic { spec, test_examples, data_seed, od_spec } => {
                let test_spec = crate::synthetic::SyntheticSpec { num_examples: *test_examples, ..spec.clone() };
                Ok(Self {
                    train: generate(spec, *data_seed, stream::SYNTH_TRAIN)?,
                    test: generate(&test_spec, *data_seed, stream::SYNTH_TEST)?,
                    od_test: od_spec
                        .as_ref()
                        .map(|od| generate(&crate::synthetic::SyntheticSpec { num_examples: *test_examples, ..od.clone() }, *data_seed, stream::SYNTH_OD))
                        .transpose()?,
                })
            }
        }
    }
}

/// Argmax accuracy; argmax ties go to the lowest class index.
pub fn accuracy(params: &ModelParams, test: &[(FeatureVector, usize)]) -> Result<f64, LoopError> {
    if test.is_empty() {
        return Err(LoopError::EmptyTestSet);
    }
    let mut correct = 0usize;
    for (x, y) in test {
        if params.predict_proba(x)?.argmax() == *y {
            correct += 1;
        }
    }
    Ok(correct as f64 / test.len() as f64)
}

pub fn evaluate(
    params: &ModelParams,
    test: &[(FeatureVector, usize)],
    od_test: Option<&[(FeatureVector, usize)]>,
) -> Result<(f64, Option<f64>), LoopError> {
    Ok((accuracy(params, test)?, od_test.map(|od| accuracy(params, od)).transpose()?))
}

/// Moves `ids` into the labeled set.
pub fn oracle_label(pool: &mut PoolState, ids: &[usize]) -> Result<(), LoopError> {
    pool.label(ids)?;
    Ok(())
}

/// Runs one experiment end to end, loading data as configured.
pub fn run_experiment(config: &ExperimentConfig, seed: u64) -> Result<ExperimentResult, LoopError> {
    config.validate().map_err(LoopError::Config)?;
    let data = Datasets::load(config)?;
    run_with_data(config, &data, seed)
}

/// Per-seed preparation of training pool, statistics and features.
struct Prepared {
    examples: Vec<TokenizedExample>,
    features: Vec<FeatureVector>,
    test: Vec<(FeatureVector, usize)>,
    od_test: Option<Vec<(FeatureVector, usize)>>,
}

pub fn run_with_data(config: &ExperimentConfig, data: &Datasets, seed: u64) -> Result<ExperimentResult, LoopError> {
    let strategy = config.resolve_strategy().map_err(|e| LoopError::Config(vec![e]))?;
    let train_docs = match &config.imbalance {
        Some(r) => subsample_imbalanced(&data.train, config.num_classes, r.positive_rate, r.negative_rate, seed)?,
        None => data.train.clone(),
    };
    let examples = tokenize_all(&train_docs);
    let stats = build_stats(&examples)?;
    let features: Vec<FeatureVector> = examples.iter().map(|e| featurize(&e.tokens, &stats)).collect();
    let to_eval = |docs: &[Document]| -> Vec<(FeatureVector, usize)> {
        tokenize_all(docs).iter().map(|e| (featurize(&e.tokens, &stats), e.label)).collect()
    };
    let prepared = Prepared {
        test: to_eval(&data.test),
        od_test: data.od_test.as_deref().map(to_eval),
        examples,
        features,
    };
    let augmenter = Augmenter::new(&stats);
    with_threads(config.threads, || run_loop(config, &strategy, &prepared, &augmenter, seed))
}

fn run_loop(
    config: &ExperimentConfig,
    strategy: &Strategy,
    data: &Prepared,
    augmenter: &Augmenter<'_>,
    seed: u64,
) -> Result<ExperimentResult, LoopError> {
    let n = data.examples.len();
    let budget = config.budget;
    let mut pool = initial_seed_split(n, budget.initial_fraction, seed)?;
    let target = fraction_count(budget.total_fraction, n).min(n).max(pool.labeled_count());
    if budget.per_iteration == 0 && target > pool.labeled_count() {
        return Err(LoopError::BudgetUnreachable);
    }
    let dim = augmenter.stats().dim();
    let pool_data = PoolData { examples: &data.examples, features: &data.features };
    let mut records = Vec::new();

    for iteration in 0.. {
        // The clock is only read when timings are wanted; wasm has none.
        let started = config.record_timings.then(Instant::now);
        let labeled: Vec<(&FeatureVector, usize)> =
            pool.labeled().iter().map(|&i| (&data.features[i], data.examples[i].label)).collect();
        let pair_store = if config.curriculum && config.train.ssl_alpha > 0.0 {
            curriculum_pairs(config, &pool, data, augmenter, seed, iteration)?
        } else {
            Vec::new()
        };
        let pairs: Vec<(&FeatureVector, &FeatureVector)> = pair_store.iter().map(|(i, xa)| (&data.features[*i], xa)).collect();
        let train_cfg = TrainConfig { seed: derive_seed(seed, &[stream::FIT, iteration as u64]), ..config.train };
        let outcome = fit(&labeled, &pairs, config.num_classes, dim, &train_cfg)?;
        let params = outcome.params;
        let loss = full_loss(&params, &labeled, &pairs, config.train.ssl_alpha)?;
        let (test_accuracy, od_accuracy) = evaluate(&params, &data.test, data.od_test.as_deref())?;

        let labeled_count = pool.labeled_count();
        let remaining = target.saturating_sub(labeled_count);
        let acquired = if remaining > 0 && !pool.unlabeled().is_empty() {
            let score_seed = derive_seed(seed, &[iteration as u64]);
            let scores = score_pool(strategy, &params, &pool, pool_data, augmenter, score_seed)?;
            select_top(&scores, budget.per_iteration.min(remaining))
        } else {
            Vec::new()
        };
        oracle_label(&mut pool, &acquired)?;
        if !pool.check_partition() {
            return Err(LoopError::Invariant("pool partition broken".into()));
        }

        let wall_clock_ms = started.map_or(0, |t| t.elapsed().as_millis() as u64);
        let done = acquired.is_empty();
        records.push(IterationRecord {
            iteration,
            labeled_count,
            labeled_fraction: labeled_count as f64 / n as f64,
            acquired_ids: acquired,
            test_accuracy,
            od_accuracy,
            loss,
            wall_clock_ms,
        });
        if done {
            break;
        }
    }

    let last = records.last().expect("at least one iteration");
    let summary = Summary {
        final_accuracy: last.test_accuracy,
        final_od_accuracy: last.od_accuracy,
        final_labeled_count: last.labeled_count,
        initial_labeled_count: pool.initial_size(),
        budget_target: target,
        num_train: n,
    };
    if summary.final_labeled_count != pool.initial_size() + pool.budget_spent() {
        return Err(LoopError::Invariant("budget accounting mismatch".into()));
    }
    Ok(ExperimentResult {
        config: config.clone(),
        strategy: strategy.to_string(),
        seed,
        records,
        summary,
    })
}

/// One augmented copy per unlabeled example for the consistency term.
fn curriculum_pairs(
    config: &ExperimentConfig,
    pool: &PoolState,
    data: &Prepared,
    augmenter: &Augmenter<'_>,
    seed: u64,
    iteration: usize,
) -> Result<Vec<(usize, FeatureVector)>, LoopError> {
    use rayon::prelude::*;
    let ids: Vec<usize> = pool.unlabeled().iter().copied().collect();
    let base = derive_seed(seed, &[stream::CURRICULUM, iteration as u64]);
    ids.par_iter()
        .map(|&id| {
            let mut rng = LabRng::seed_from_u64(Augmenter::copy_seed(base, id, 0));
            let copy = augmenter.apply(&data.examples[id], &config.allsh.policy, &mut rng)?;
            Ok((id, featurize(&copy.tokens, augmenter.stats())))
        })
        .collect()
}

fn full_loss(
    params: &ModelParams,
    labeled: &[(&FeatureVector, usize)],
    pairs: &[(&FeatureVector, &FeatureVector)],
    ssl_alpha: f64,
) -> Result<LossBreakdown, LoopError> {
    let (supervised, _) = supervised_loss(params, labeled)?;
    let consistency = if pairs.is_empty() { 0.0 } else { consistency_loss(params, pairs)?.0 };
    let weight = if pairs.is_empty() { 0.0 } else { ssl_alpha };
    Ok(LossBreakdown { supervised, consistency, total: supervised + weight * consistency })
}
