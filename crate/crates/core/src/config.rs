//! Experiment configuration: a single JSON document.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::acquisition::Strategy;
use crate::augment::{AugmentationPolicy, DEFAULT_K};
use crate::model::TrainConfig;
use crate::synthetic::SyntheticSpec;

/// Above this total fraction the run is still allowed but logged.
pub const BUDGET_WARN_FRACTION: f64 = 0.15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase")]
pub enum DataSource {
    Files {
        train: PathBuf,
        test: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        od_test: Option<PathBuf>,
    },
    Synthetic {
        spec: SyntheticSpec,
        test_examples: usize,
        #[serde(default)]
        data_seed: u64,
        /// Optional shifted generator used as the out-of-domain test set.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        od_spec: Option<SyntheticSpec>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BudgetSpec {
    pub initial_fraction: f64,
    pub per_iteration: usize,
    pub total_fraction: f64,
}

impl Default for BudgetSpec {
    fn default() -> Self {
        Self {
            initial_fraction: 0.001,
            per_iteration: 50,
            total_fraction: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AllshSettings {
    pub k: usize,
    pub policy: AugmentationPolicy,
}

impl Default for AllshSettings {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            policy: AugmentationPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImbalanceRates {
    pub positive_rate: f64,
    pub negative_rate: f64,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub data: DataSource,
    pub num_classes: usize,
    /// Strategy name, see [`Strategy::parse_with`].
    pub strategy: String,
    #[serde(default)]
    pub allsh: AllshSettings,
    /// Train with the consistency term over unlabeled pairs.
    #[serde(default)]
    pub curriculum: bool,
    #[serde(default)]
    pub budget: BudgetSpec,
    /// `seed` here is ignored; each fit derives its own.
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub imbalance: Option<ImbalanceRates>,
    #[serde(default)]
    pub seeds: Vec<u64>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Worker threads for pool scoring; `None` uses all cores.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    /// When false, `wall_clock_ms` is written as 0 so outputs are
    /// byte-reproducible.
    #[serde(default = "default_true")]
    pub record_timings: bool,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self, String> {
        serde_json::from_str(s).map_err(|e| format!("config: {e}"))
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let s = std::fs::read_to_string(path).map_err(|e| format!("config {}: {e}", path.display()))?;
        Self::from_json(&s)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn resolve_strategy(&self) -> Result<Strategy, String> {
        Strategy::parse_with(&self.strategy, self.allsh.policy, self.allsh.k).map_err(|e| e.to_string())
    }

    /// Collects every violated field instead of stopping at the first.
    pub fn validate(&self) -> Result<(), Vec<String>> {
        let mut errs = Vec::new();
        match &self.data {
            DataSource::Files { train, test, od_test } => {
                for (field, p) in [("data.train", Some(train)), ("data.test", Some(test)), ("data.od_test", od_test.as_ref())] {
                    if let Some(p) = p {
                        if !p.is_file() {
                            errs.push(format!("{field}: file not found: {}", p.display()));
                        }
                    }
                }
            }
            DataSource::Synthetic { spec, test_examples, od_spec, .. } => {
                if let Err(e) = spec.validate() {
                    errs.push(format!("data.spec: {e}"));
                }
                if spec.num_classes != self.num_classes {
                    errs.push("data.spec.num_classes: must equal num_classes".into());
                }
                if *test_examples == 0 {
                    errs.push("data.test_examples: must be positive".into());
                }
                if let Some(od) = od_spec {
                    if let Err(e) = od.validate() {
                        errs.push(format!("data.od_spec: {e}"));
                    }
                    if od.num_classes != self.num_classes {
                        errs.push("data.od_spec.num_classes: must equal num_classes".into());
                    }
                }
            }
        }
        if self.num_classes < 2 {
            errs.push("num_classes: must be at least 2".into());
        }
        if let Err(e) = self.resolve_strategy() {
            errs.push(format!("strategy: {e}"));
        }
        if self.allsh.k == 0 {
            errs.push("allsh.k: must be at least 1".into());
        }
        if let Err(e) = self.allsh.policy.validate() {
            errs.push(format!("allsh.policy: {e}"));
        }
        let b = &self.budget;
        if !(b.initial_fraction > 0.0 && b.initial_fraction < 1.0) {
            errs.push("budget.initial_fraction: must be in (0, 1)".into());
        }
        if !(b.total_fraction > 0.0 && b.total_fraction <= 1.0) {
            errs.push("budget.total_fraction: must be in (0, 1]".into());
        }
        if b.per_iteration == 0 && b.total_fraction > b.initial_fraction {
            errs.push("budget.per_iteration: must be positive to reach the budget".into());
        }
        if let Err(e) = self.train.validate() {
            errs.push(format!("train: {e}"));
        }
        if let Some(r) = &self.imbalance {
            if self.num_classes != 2 {
                errs.push("imbalance: requires num_classes = 2".into());
            }
            for (field, v) in [("imbalance.positive_rate", r.positive_rate), ("imbalance.negative_rate", r.negative_rate)] {
                if !(v > 0.0 && v <= 1.0) {
                    errs.push(format!("{field}: must be in (0, 1]"));
                }
            }
        }
        if self.seeds.is_empty() {
            errs.push("seeds: at least one seed is required".into());
        }
        if self.threads == Some(0) {
            errs.push("threads: must be positive".into());
        }
        if errs.is_empty() {
            if b.total_fraction > BUDGET_WARN_FRACTION {
                log::warn!("budget.total_fraction {} exceeds {}", b.total_fraction, BUDGET_WARN_FRACTION);
            }
            Ok(())
        } else {
            Err(errs)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic() -> ExperimentConfig {
        ExperimentConfig {
            data: DataSource::Synthetic {
                spec: SyntheticSpec::default(),
                test_examples: 100,
                data_seed: 0,
                od_spec: None,
            },
            num_classes: 2,
            strategy: "allsh-wca".into(),
            allsh: AllshSettings::default(),
            curriculum: false,
            budget: BudgetSpec::default(),
            train: TrainConfig::default(),
            imbalance: None,
            seeds: vec![1],
            output_dir: "out".into(),
            threads: None,
            record_timings: true,
        }
    }

    #[test]
    fn defaults_and_round_trip() {
        let c = synthetic();
        assert!(c.validate().is_ok());
        let back = ExperimentConfig::from_json(&c.to_json_pretty()).unwrap();
        assert_eq!(back, c);
        assert_eq!(c.budget.per_iteration, 50);
        assert_eq!(c.train.ssl_alpha, 0.01);
        assert_eq!(c.train.iterations, 200);
        assert_eq!(c.train.batch_size, 16);
        assert_eq!(c.allsh.policy.p_aug, 0.3);
    }

    #[test]
    fn minimal_json_gets_defaults() {
        let c = ExperimentConfig::from_json(
            r#"{"data":{"source":"files","train":"a.jsonl","test":"b.jsonl"},"num_classes":2,"strategy":"random","seeds":[1]}"#,
        )
        .unwrap();
        assert_eq!(c.budget, BudgetSpec::default());
        assert!(c.record_timings);
        let errs = c.validate().unwrap_err();
        assert!(errs.iter().any(|e| e.starts_with("data.train")));
        assert!(errs.iter().any(|e| e.starts_with("data.test")));
    }

    #[test]
    fn every_violation_listed() {
        let mut c = synthetic();
        c.strategy = "badge".into();
        c.seeds.clear();
        c.budget.total_fraction = 1.5;
        c.train.learning_rate = -1.0;
        let errs = c.validate().unwrap_err();
        for field in ["strategy", "seeds", "budget.total_fraction", "train"] {
            assert!(errs.iter().any(|e| e.starts_with(field)), "{field} missing from {errs:?}");
        }
    }
}
