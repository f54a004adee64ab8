//! Result files: per-iteration CSV, result JSON, and the cross-seed summary.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alloop::ExperimentResult;

pub const ITERATION_COLUMNS: [&str; 10] = [
    "seed",
    "strategy",
    "iteration",
    "labeled_count",
    "labeled_fraction",
    "test_accuracy",
    "od_accuracy",
    "sup_loss",
    "cons_loss",
    "wall_clock_ms",
];

pub const REPORT_COLUMNS: [&str; 5] = ["strategy", "budget_fraction", "n_seeds", "mean_accuracy", "std_accuracy"];

pub const MANIFEST_FILE: &str = "manifest.json";
pub const REPORT_FILE: &str = "report.csv";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("no result files in {0}")]
    NoResults(PathBuf),
    #[error("{path}: {msg}")]
    BadResult { path: PathBuf, msg: String },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out)
}

/// File stem for one (strategy, seed) cell; strategy labels may contain
/// `:` and `=`.
pub fn cell_stem(strategy: &str, seed: u64) -> String {
    let safe: String = strategy
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' })
        .collect();
    format!("{safe}_seed{seed}")
}

pub fn write_iterations_csv<W: Write>(result: &ExperimentResult, out: W) -> Result<(), ReportError> {
    let mut w = csv_writer(out);
    w.write_record(ITERATION_COLUMNS)?;
    for r in &result.records {
        w.write_record([
            result.seed.to_string(),
            result.strategy.clone(),
            r.iteration.to_string(),
            r.labeled_count.to_string(),
            r.labeled_fraction.to_string(),
            r.test_accuracy.to_string(),
            r.od_accuracy.map(|v| v.to_string()).unwrap_or_default(),
            r.loss.supervised.to_string(),
            r.loss.consistency.to_string(),
            r.wall_clock_ms.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes through a temporary file and renames, so a killed process never
/// leaves a half-written file behind.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("")
    ));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}

/// Writes `<stem>.csv` and `<stem>.json` into `dir`; returns both paths.
pub fn write_result_files(result: &ExperimentResult, dir: &Path) -> Result<(PathBuf, PathBuf), ReportError> {
    fs::create_dir_all(dir)?;
    let stem = cell_stem(&result.strategy, result.seed);
    let csv_path = dir.join(format!("{stem}.csv"));
    let json_path = dir.join(format!("{stem}.json"));
    let mut buf = Vec::new();
    write_iterations_csv(result, &mut buf)?;
    write_atomic(&csv_path, &buf)?;
    let mut json = serde_json::to_string_pretty(result).expect("result serializes");
    json.push('\n');
    write_atomic(&json_path, json.as_bytes())?;
    Ok((csv_path, json_path))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub strategy: String,
    pub budget_fraction: f64,
    pub n_seeds: usize,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
}

/// Mean and sample (n − 1) standard deviation; the deviation of a single
/// value is reported as 0.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Groups final accuracies by (strategy, total budget fraction).
pub fn summarize(results: &[ExperimentResult]) -> Vec<ReportRow> {
    let mut groups: BTreeMap<(String, u64), Vec<f64>> = BTreeMap::new();
    for r in results {
        let key = (r.strategy.clone(), r.config.budget.total_fraction.to_bits());
        groups.entry(key).or_default().push(r.summary.final_accuracy);
    }
    let mut rows: Vec<ReportRow> = groups
        .into_iter()
        .map(|((strategy, bits), accs)| {
            let (mean, std) = mean_std(&accs);
            ReportRow {
                strategy,
                budget_fraction: f64::from_bits(bits),
                n_seeds: accs.len(),
                mean_accuracy: mean,
                std_accuracy: std,
            }
        })
        .collect();
    rows.sort_by(|a, b| a.strategy.cmp(&b.strategy).then(a.budget_fraction.total_cmp(&b.budget_fraction)));
    rows
}

/// Loads every result JSON in `dir` (the manifest and the report excluded),
/// in file-name order.
pub fn load_results(dir: &Path) -> Result<Vec<ExperimentResult>, ReportError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .filter(|p| p.file_name().is_some_and(|n| n != MANIFEST_FILE))
        .collect();
    paths.sort();
    let mut out = Vec::with_capacity(paths.len());
    for path in paths {
        let s = fs::read_to_string(&path)?;
        let r: ExperimentResult =
            serde_json::from_str(&s).map_err(|e| ReportError::BadResult { path: path.clone(), msg: e.to_string() })?;
        out.push(r);
    }
    if out.is_empty() {
        return Err(ReportError::NoResults(dir.to_path_buf()));
    }
    Ok(out)
}

pub fn write_report_csv<W: Write>(rows: &[ReportRow], out: W) -> Result<(), ReportError> {
    let mut w = csv_writer(out);
    w.write_record(REPORT_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.strategy.clone(),
            r.budget_fraction.to_string(),
            r.n_seeds.to_string(),
            r.mean_accuracy.to_string(),
            r.std_accuracy.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellStatus {
    Pending,
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestCell {
    pub strategy: String,
    pub seed: u64,
    pub status: CellStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub json: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub complete: bool,
    pub cells: Vec<ManifestCell>,
}

impl Manifest {
    pub fn missing(&self) -> impl Iterator<Item = &ManifestCell> {
        self.cells.iter().filter(|c| c.status != CellStatus::Done)
    }

    pub fn save(&self, dir: &Path) -> io::Result<()> {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        write_atomic(&dir.join(MANIFEST_FILE), s.as_bytes())
    }

    pub fn load(dir: &Path) -> io::Result<Self> {
        let s = fs::read_to_string(dir.join(MANIFEST_FILE))?;
        serde_json::from_str(&s).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
    }
}
