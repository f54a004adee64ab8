//! Pool-based active learning with local-sensitivity acquisition.
//!
//! The crate is organized bottom-up:
//!
//! - [`corpus`]: JSONL ingestion, tokenization, TF-IDF statistics, pools
//! - [`divergence`]: KL, Jensen-Shannon distance, alpha-divergence, entropy
//! - [`augment`]: TF-IDF word replacement and word dropout, `K` copies
//! - [`model`]: softmax regression with a consistency-regularized trainer
//! - [`acquisition`]: random, entropy and augmentation-divergence scoring
//! - [`alloop`]: the train / score / select / label loop
//! - [`config`], [`synthetic`], [`report`], [`cli`]: the experiment harness

pub mod acquisition;
pub mod alloop;
pub mod augment;
pub mod cli;
pub mod config;
pub mod corpus;
pub mod divergence;
pub mod model;
pub mod report;
pub mod rng;
pub mod synthetic;

pub use acquisition::{select_top, score_pool, AcquisitionScore, Strategy};
pub use alloop::{run_experiment, ExperimentResult, IterationRecord};
pub use config::ExperimentConfig;
pub use divergence::{DivergenceKind, ProbDist};
pub use model::{ModelParams, TrainConfig};
