//! Command implementations behind the `allab` binary.
//!
//! Exit codes: 0 success, 2 config error, 3 data error, 4 internal
//! invariant violation.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};

use thiserror::Error;

use crate::alloop::{run_with_data, Datasets, ExperimentResult, LoopError};
use crate::config::ExperimentConfig;
use crate::report::{
    load_results, summarize, write_atomic, write_report_csv, write_result_files, CellStatus, Manifest,
    ManifestCell, ReportError, REPORT_FILE,
};
use crate::rng::stream;
use crate::synthetic::{generate, write_jsonl, SyntheticSpec};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config invalid:\n  {}", .0.join("\n  "))]
    ConfigInvalid(Vec<String>),
    #[error("data error: {0}")]
    Data(String),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::ConfigInvalid(_) => 2,
            Self::Data(_) => 3,
            Self::Invariant(_) => 4,
        }
    }
}

impl From<LoopError> for CliError {
    fn from(e: LoopError) -> Self {
        match e {
            LoopError::Config(v) => Self::ConfigInvalid(v),
            LoopError::BudgetUnreachable => Self::ConfigInvalid(vec![e.to_string()]),
            LoopError::Invariant(m) => Self::Invariant(m),
            other => Self::Data(other.to_string()),
        }
    }
}

impl From<ReportError> for CliError {
    fn from(e: ReportError) -> Self {
        Self::Data(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Data(e.to_string())
    }
}

fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let config = ExperimentConfig::load(path).map_err(|e| CliError::ConfigInvalid(vec![e]))?;
    config.validate().map_err(CliError::ConfigInvalid)?;
    Ok(config)
}

/// Runs the configured strategy for every configured seed. Returns the
/// files written.
pub fn cmd_run(config_path: &Path, out: Option<&Path>) -> Result<Vec<PathBuf>, CliError> {
    let mut config = load_config(config_path)?;
    if let Some(out) = out {
        config.output_dir = out.to_path_buf();
    }
    run_config(&config)
}

pub fn run_config(config: &ExperimentConfig) -> Result<Vec<PathBuf>, CliError> {
    config.validate().map_err(CliError::ConfigInvalid)?;
    let data = Datasets::load(config)?;
    let mut written = Vec::new();
    for &seed in &config.seeds {
        let result = run_with_data(config, &data, seed)?;
        let (csv, json) = write_result_files(&result, &config.output_dir)?;
        log::info!("{} seed {}: final accuracy {:.4}", result.strategy, seed, result.summary.final_accuracy);
        written.push(csv);
        written.push(json);
    }
    Ok(written)
}

pub fn parse_csv_list<T: std::str::FromStr>(field: &str, s: &str) -> Result<Vec<T>, CliError> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| CliError::ConfigInvalid(vec![format!("{field}: cannot parse {t:?}")])))
        .collect()
}

/// Runs the strategy × seed cross product into the config's output
/// directory. The manifest is rewritten after every cell, so an interrupted
/// sweep leaves finished cells intact and the rest marked pending.
/// Setting `cancel` stops before the next cell starts.
pub fn cmd_sweep(
    config_path: &Path,
    strategies: &[String],
    seeds: &[u64],
    out: Option<&Path>,
    cancel: Option<&AtomicBool>,
) -> Result<Manifest, CliError> {
    let mut config = ExperimentConfig::load(config_path).map_err(|e| CliError::ConfigInvalid(vec![e]))?;
    if let Some(out) = out {
        config.output_dir = out.to_path_buf();
    }
    sweep_config(&config, strategies, seeds, cancel)
}

pub fn sweep_config(
    base: &ExperimentConfig,
    strategies: &[String],
    seeds: &[u64],
    cancel: Option<&AtomicBool>,
) -> Result<Manifest, CliError> {
    let mut errs = Vec::new();
    if strategies.is_empty() {
        errs.push("strategies: at least one strategy is required".to_string());
    }
    if seeds.is_empty() {
        errs.push("seeds: at least one seed is required".to_string());
    }
    let configs: Vec<ExperimentConfig> = strategies
        .iter()
        .map(|s| ExperimentConfig { strategy: s.clone(), seeds: seeds.to_vec(), ..base.clone() })
        .collect();
    for c in &configs {
        if let Err(v) = c.validate() {
            errs.extend(v);
        }
    }
    if !errs.is_empty() {
        errs.dedup();
        return Err(CliError::ConfigInvalid(errs));
    }

    let dir = &base.output_dir;
    fs::create_dir_all(dir)?;
    let data = Datasets::load(base)?;
    let mut manifest = Manifest {
        complete: false,
        cells: configs
            .iter()
            .flat_map(|c| {
                let label = c.resolve_strategy().expect("validated").to_string();
                seeds.iter().map(move |&seed| ManifestCell {
                    strategy: label.clone(),
                    seed,
                    status: CellStatus::Pending,
                    csv: None,
                    json: None,
                    error: None,
                })
            })
            .collect(),
    };
    manifest.save(dir)?;

    let mut cell = 0;
    for c in &configs {
        for &seed in seeds {
            if cancel.is_some_and(|f| f.load(Ordering::SeqCst)) {
                return Ok(manifest);
            }
            match run_with_data(c, &data, seed) {
                Ok(result) => {
                    let (csv, json) = write_result_files(&result, dir)?;
                    let entry = &mut manifest.cells[cell];
                    entry.status = CellStatus::Done;
                    entry.csv = csv.file_name().map(|n| n.to_string_lossy().into_owned());
                    entry.json = json.file_name().map(|n| n.to_string_lossy().into_owned());
                }
                Err(e) => {
                    log::error!("{} seed {seed}: {e}", manifest.cells[cell].strategy);
                    manifest.cells[cell].status = CellStatus::Failed;
                    manifest.cells[cell].error = Some(e.to_string());
                }
            }
            manifest.save(dir)?;
            cell += 1;
        }
    }
    manifest.complete = manifest.cells.iter().all(|c| c.status == CellStatus::Done);
    manifest.save(dir)?;
    Ok(manifest)
}

/// Writes `report.csv` (or `out`) summarizing every result in `dir`.
pub fn cmd_report(dir: &Path, out: Option<&Path>) -> Result<PathBuf, CliError> {
    let results: Vec<ExperimentResult> = load_results(dir)?;
    let rows = summarize(&results);
    let path = out.map(Path::to_path_buf).unwrap_or_else(|| dir.join(REPORT_FILE));
    let mut buf = Vec::new();
    write_report_csv(&rows, &mut buf)?;
    write_atomic(&path, &buf)?;
    Ok(path)
}

pub fn cmd_gen_synthetic(spec_path: &Path, seed: u64, out: &Path) -> Result<(), CliError> {
    let s = fs::read_to_string(spec_path).map_err(|e| CliError::ConfigInvalid(vec![format!("spec {}: {e}", spec_path.display())]))?;
    let spec: SyntheticSpec = serde_json::from_str(&s).map_err(|e| CliError::ConfigInvalid(vec![format!("spec: {e}")]))?;
    let docs = generate(&spec, seed, stream::SYNTH_TRAIN).map_err(|e| CliError::ConfigInvalid(vec![e.to_string()]))?;
    let mut buf = Vec::new();
    write_jsonl(&docs, &mut buf)?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    write_atomic(out, &buf)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::ConfigInvalid(vec![]).exit_code(), 2);
        assert_eq!(CliError::Data(String::new()).exit_code(), 3);
        assert_eq!(CliError::Invariant(String::new()).exit_code(), 4);
    }

    #[test]
    fn csv_lists() {
        assert_eq!(parse_csv_list::<u64>("seeds", "1, 2,3").unwrap(), [1, 2, 3]);
        assert!(parse_csv_list::<u64>("seeds", "").unwrap().is_empty());
        assert!(matches!(parse_csv_list::<u64>("seeds", "x"), Err(CliError::ConfigInvalid(_))));
    }
}
