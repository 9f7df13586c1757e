//! k-grid experiments: anonymize a dataset at every k with every algorithm,
//! augment each output with every backend, and tabulate requested versus
//! measured k.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::Serialize;

use crate::anonymize::{self, Algorithm};
use crate::audit::{audit, compare_cell, ReportCell};
use crate::backend::{from_config, BackendConfig, BackendKind, Generator};
use crate::data::{load_dataset, sample_records, serialize_csv, Dataset, SchemaConfig};
use crate::error::{Error, Result};
use crate::pipeline::{augment_and_merge, default_count, AugmentOptions, OutcomeSummary, ValidationPolicy};
use crate::scalar::Scalar;

pub const SKIP_K_EXCEEDS_N: &str = "k exceeds n";

/// `[2, 5, 10, ..., 100]`.
pub fn default_k_grid() -> Vec<usize> {
    std::iter::once(2).chain((5..=100).step_by(5)).collect()
}

/// `"default"` or a comma-separated list such as `"2,5,10"`.
pub fn parse_k_grid(text: &str) -> Result<Vec<usize>> {
    if text.trim() == "default" {
        return Ok(default_k_grid());
    }
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidArgument(format!("bad k value `{}`", t.trim())))
        })
        .collect()
}

impl BackendConfig {
    /// Short column label: `synth` or the model name.
    pub fn label(&self) -> String {
        match self.kind {
            BackendKind::DeterministicSynth => "synth".into(),
            BackendKind::RemoteLlm => self.model_name.clone().unwrap_or_else(|| "llm".into()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub dataset_path: PathBuf,
    pub config_path: PathBuf,
    pub k_values: Vec<usize>,
    pub algorithms: Vec<Algorithm>,
    /// Each backend's `seed` drives its augmentation runs.
    pub backends: Vec<BackendConfig>,
    /// Records requested per augmentation attempt; `None` means `ceil(n / 10)`.
    pub augment_count: Option<usize>,
    pub sample_count: Option<usize>,
    /// Seeds sampling and the randomized anonymizers.
    pub seed: u64,
    pub output_dir: PathBuf,
    pub policy: ValidationPolicy,
    /// Grid cells run concurrently; 0 means one per core.
    pub parallelism: usize,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.k_values.is_empty() {
            return Err(Error::InvalidArgument("k grid is empty".into()));
        }
        if let Some(&k) = self.k_values.iter().find(|&&k| k < 2) {
            return Err(Error::InvalidK {
                k,
                reason: "grid values must be at least 2".into(),
            });
        }
        if self.k_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("k grid must be strictly increasing".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::InvalidArgument("no algorithms selected".into()));
        }
        if self.augment_count == Some(0) {
            return Err(Error::InvalidArgument("augment count must be at least 1".into()));
        }
        if self.policy.max_attempts == 0 {
            return Err(Error::InvalidArgument("max_attempts must be at least 1".into()));
        }
        for b in &self.backends {
            b.validate()?;
        }
        Ok(())
    }

    /// Algorithms in report column order, without duplicates.
    fn ordered_algorithms(&self) -> Vec<Algorithm> {
        Algorithm::ALL
            .into_iter()
            .filter(|a| self.algorithms.contains(a))
            .collect()
    }
}

/// One table entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TableCell {
    Measured(ReportCell),
    Skipped(String),
    Failed(String),
}

impl fmt::Display for TableCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TableCell::Measured(c) => c.fmt(f),
            TableCell::Skipped(r) => write!(f, "skipped: {r}"),
            TableCell::Failed(r) => write!(f, "failed: {r}"),
        }
    }
}

impl Serialize for TableCell {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Rows keyed by k, one column per algorithm (or algorithm and backend).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentTable {
    pub title: String,
    pub columns: Vec<String>,
    pub rows: Vec<(usize, Vec<TableCell>)>,
}

impl ExperimentTable {
    pub fn cell(&self, k: usize, column: &str) -> Option<&TableCell> {
        let c = self.columns.iter().position(|x| x == column)?;
        self.rows.iter().find(|(rk, _)| *rk == k).map(|(_, cells)| &cells[c])
    }

    pub fn cells(&self) -> impl Iterator<Item = &TableCell> {
        self.rows.iter().flat_map(|(_, cells)| cells)
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["k".to_string()];
        header.extend(self.columns.iter().cloned());
        w.write_record(&header)?;
        for (k, cells) in &self.rows {
            let mut row = vec![k.to_string()];
            row.extend(cells.iter().map(ToString::to_string));
            w.write_record(&row)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }

    /// Space-aligned text in `=` / `>(v)` / `<(v)` notation.
    pub fn to_text(&self) -> String {
        let mut grid: Vec<Vec<String>> = vec![std::iter::once("k".to_string())
            .chain(self.columns.iter().cloned())
            .collect()];
        for (k, cells) in &self.rows {
            grid.push(
                std::iter::once(k.to_string())
                    .chain(cells.iter().map(ToString::to_string))
                    .collect(),
            );
        }
        let widths: Vec<usize> = (0..grid[0].len())
            .map(|c| grid.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = format!("{}\n", self.title);
        for row in &grid {
            let line: Vec<String> = row
                .iter()
                .zip(&widths)
                .map(|(s, w)| format!("{s:<w$}"))
                .collect();
            out.push_str(line.join("  ").trim_end());
            out.push('\n');
        }
        out
    }
}

/// Measured values behind one anonymization cell.
#[derive(Debug, Clone, Serialize)]
pub struct AnonymizeResult {
    pub k: usize,
    pub algorithm: Algorithm,
    pub cell: TableCell,
    pub measured_k: Option<usize>,
    pub l_distinct: Option<usize>,
    pub gcp: Option<f64>,
    pub partitions: Option<usize>,
    pub seed: Option<u64>,
    /// Relative to the output directory.
    pub output_csv: Option<String>,
}

/// Measured values behind one augmentation cell.
#[derive(Debug, Clone, Serialize)]
pub struct AugmentResult {
    pub k: usize,
    pub algorithm: Algorithm,
    pub backend: String,
    pub cell: TableCell,
    pub outcome: Option<OutcomeSummary>,
    pub seed: u64,
    pub output_csv: Option<String>,
}

/// Wall-clock time of one grid cell, kept out of the deterministic reports.
#[derive(Debug, Clone, Serialize)]
pub struct CellTiming {
    pub k: usize,
    pub algorithm: Algorithm,
    pub millis: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport<T> {
    pub anonymize_table: ExperimentTable,
    pub augmented_table: ExperimentTable,
    pub anonymize_results: Vec<AnonymizeResult>,
    pub augment_results: Vec<AugmentResult>,
    pub timings: Vec<CellTiming>,
    /// (path relative to the output directory, dataset) for every produced CSV.
    pub outputs: Vec<(String, Dataset<T>)>,
    /// Records in the dataset the grid ran on.
    pub n: usize,
}

struct CellOutput<T> {
    anonymize: AnonymizeResult,
    augment: Vec<AugmentResult>,
    outputs: Vec<(String, Dataset<T>)>,
    timing: CellTiming,
}

/// Runs the grid on an in-memory dataset. Nothing is written to disk.
///
/// Cells with `k > n` are skipped. A failing cell is recorded in the tables
/// and the rest of the grid still runs.
pub fn run_grid<T: Scalar>(d: &Dataset<T>, plan: &ExperimentPlan) -> Result<ExperimentReport<T>> {
    plan.validate()?;
    let algorithms = plan.ordered_algorithms();
    let generators: Vec<Box<dyn Generator<T>>> =
        plan.backends.iter().map(from_config).collect::<Result<_>>()?;
    let labels: Vec<String> = plan.backends.iter().map(BackendConfig::label).collect();

    let jobs: Vec<(usize, Algorithm)> = plan
        .k_values
        .iter()
        .flat_map(|&k| algorithms.iter().map(move |&a| (k, a)))
        .collect();
    let run = |&(k, alg): &(usize, Algorithm)| run_cell(d, k, alg, plan, &generators, &labels);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.parallelism)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let cells: Vec<CellOutput<T>> = pool.install(|| jobs.par_iter().map(run).collect());

    let mut anonymize_table = ExperimentTable {
        title: "Anonymization: requested vs measured k".into(),
        columns: algorithms.iter().map(|a| a.short_name().to_string()).collect(),
        rows: Vec::new(),
    };
    let mut augmented_table = ExperimentTable {
        title: "Augmentation: requested vs measured k".into(),
        columns: algorithms
            .iter()
            .flat_map(|a| labels.iter().map(move |l| format!("{a}/{l}")))
            .collect(),
        rows: Vec::new(),
    };
    let mut report = ExperimentReport {
        anonymize_table: anonymize_table.clone(),
        augmented_table: augmented_table.clone(),
        anonymize_results: Vec::new(),
        augment_results: Vec::new(),
        timings: Vec::new(),
        outputs: Vec::new(),
        n: d.len(),
    };
    for (row, chunk) in cells.chunks(algorithms.len()).enumerate() {
        let k = plan.k_values[row];
        anonymize_table
            .rows
            .push((k, chunk.iter().map(|c| c.anonymize.cell.clone()).collect()));
        augmented_table.rows.push((
            k,
            chunk
                .iter()
                .flat_map(|c| c.augment.iter().map(|a| a.cell.clone()))
                .collect(),
        ));
    }
    for c in cells {
        report.anonymize_results.push(c.anonymize);
        report.augment_results.extend(c.augment);
        report.outputs.extend(c.outputs);
        report.timings.push(c.timing);
    }
    report.anonymize_table = anonymize_table;
    report.augmented_table = augmented_table;
    Ok(report)
}

fn run_cell<T: Scalar>(
    d: &Dataset<T>,
    k: usize,
    alg: Algorithm,
    plan: &ExperimentPlan,
    generators: &[Box<dyn Generator<T>>],
    labels: &[String],
) -> CellOutput<T> {
    let started = Instant::now();
    let mut anonymize = AnonymizeResult {
        k,
        algorithm: alg,
        cell: TableCell::Skipped(SKIP_K_EXCEEDS_N.into()),
        measured_k: None,
        l_distinct: None,
        gcp: None,
        partitions: None,
        seed: None,
        output_csv: None,
    };
    let skipped = |cell: TableCell| -> Vec<AugmentResult> {
        plan.backends
            .iter()
            .zip(labels)
            .map(|(b, l)| AugmentResult {
                k,
                algorithm: alg,
                backend: l.clone(),
                cell: cell.clone(),
                outcome: None,
                seed: b.seed,
                output_csv: None,
            })
            .collect()
    };
    let finish = |anonymize, augment, outputs| CellOutput {
        anonymize,
        augment,
        outputs,
        timing: CellTiming {
            k,
            algorithm: alg,
            millis: started.elapsed().as_secs_f64() * 1e3,
        },
    };

    if k > d.len() {
        let aug = skipped(anonymize.cell.clone());
        return finish(anonymize, aug, Vec::new());
    }
    let run = match anonymize::anonymize(d, alg, k, plan.seed).and_then(|r| Ok((r.metadata()?, r))) {
        Ok(r) => r,
        Err(e) => {
            anonymize.cell = TableCell::Failed(e.to_string());
            let aug = skipped(TableCell::Skipped("anonymization failed".into()));
            return finish(anonymize, aug, Vec::new());
        }
    };
    let (meta, run) = run;
    let anon_path = format!("anonymized/{}_k{k}.csv", alg.short_name());
    anonymize.cell = TableCell::Measured(compare_cell(k, meta.report.k));
    anonymize.measured_k = Some(meta.report.k);
    anonymize.l_distinct = meta.report.l_distinct;
    anonymize.gcp = Some(meta.gcp);
    anonymize.partitions = Some(meta.partitions);
    anonymize.seed = meta.seed;
    anonymize.output_csv = Some(anon_path.clone());

    let mut outputs = Vec::new();
    let mut augment = Vec::new();
    for ((cfg, g), label) in plan.backends.iter().zip(generators).zip(labels) {
        let options = AugmentOptions {
            count: plan.augment_count.unwrap_or_else(|| default_count(d.len())),
            seed: cfg.seed,
        };
        let mut result = AugmentResult {
            k,
            algorithm: alg,
            backend: label.clone(),
            cell: TableCell::Skipped(String::new()),
            outcome: None,
            seed: cfg.seed,
            output_csv: None,
        };
        match augment_and_merge(&run.output, k, g.as_ref(), &plan.policy, options) {
            Ok(a) => {
                let path = format!("augmented/{}_{}_k{k}.csv", alg.short_name(), sanitize(label));
                result.cell = TableCell::Measured(a.outcome.cell);
                result.outcome = Some(a.outcome.summary());
                result.output_csv = Some(path.clone());
                outputs.push((path, a.outcome.merged));
            }
            Err(e) => result.cell = TableCell::Failed(e.to_string()),
        }
        augment.push(result);
    }
    outputs.insert(0, (anon_path, run.output));
    finish(anonymize, augment, outputs)
}

fn sanitize(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
        .collect()
}

#[derive(Serialize)]
struct ResultsFile<'a> {
    n: usize,
    seed: u64,
    sample_count: Option<usize>,
    augment_count: Option<usize>,
    k_values: &'a [usize],
    policy: &'a ValidationPolicy,
    backends: Vec<crate::backend::BackendSummary>,
    anonymize_table: &'a ExperimentTable,
    augmented_table: &'a ExperimentTable,
    anonymize: &'a [AnonymizeResult],
    augment: &'a [AugmentResult],
}

/// Writes tables, per-cell CSVs and JSON results under `dir`.
///
/// Everything except `run_metadata.json` (timings and a timestamp) is a
/// pure function of the plan and the data.
pub fn write_report<T: Scalar>(report: &ExperimentReport<T>, plan: &ExperimentPlan, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (rel, d) in &report.outputs {
        let path = dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(path, serialize_csv(d))?;
    }
    fs::write(dir.join("anonymize_table.csv"), report.anonymize_table.to_csv()?)?;
    fs::write(dir.join("anonymize_table.txt"), report.anonymize_table.to_text())?;
    fs::write(dir.join("augmented_table.csv"), report.augmented_table.to_csv()?)?;
    fs::write(dir.join("augmented_table.txt"), report.augmented_table.to_text())?;

    let results = ResultsFile {
        n: report.n,
        seed: plan.seed,
        sample_count: plan.sample_count,
        augment_count: plan.augment_count,
        k_values: &plan.k_values,
        policy: &plan.policy,
        backends: plan.backends.iter().map(BackendConfig::summary).collect(),
        anonymize_table: &report.anonymize_table,
        augmented_table: &report.augmented_table,
        anonymize: &report.anonymize_results,
        augment: &report.augment_results,
    };
    fs::write(dir.join("results.json"), serde_json::to_string_pretty(&results)?)?;

    let started = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let meta = serde_json::json!({
        "written_at_unix": started,
        "parallelism": plan.parallelism,
        "total_millis": report.timings.iter().map(|t| t.millis).sum::<f64>(),
        "cells": report.timings,
    });
    fs::write(dir.join("run_metadata.json"), serde_json::to_string_pretty(&meta)?)?;
    Ok(())
}

/// Loads, optionally samples, runs the grid and writes the report.
///
/// Only dataset and config loading failures are fatal.
pub fn run_experiment<T: Scalar>(plan: &ExperimentPlan) -> Result<ExperimentReport<T>> {
    plan.validate()?;
    let config = SchemaConfig::load(&plan.config_path)?;
    let full: Dataset<T> = load_dataset(fs::File::open(&plan.dataset_path)?, &config)?;
    let d = match plan.sample_count {
        Some(count) => sample_records(&full, count, plan.seed)?,
        None => full,
    };
    let report = run_grid(&d, plan)?;
    fs::create_dir_all(&plan.output_dir)?;
    fs::write(plan.output_dir.join("input.csv"), serialize_csv(&d))?;
    write_report(&report, plan, &plan.output_dir)?;
    log::info!(
        "experiment finished: {} anonymization cells, {} augmentation cells",
        report.anonymize_results.len(),
        report.augment_results.len()
    );
    Ok(report)
}

/// Audited k of every produced dataset, for cross-checks against the tables.
pub fn audited_outputs<T: Scalar>(report: &ExperimentReport<T>) -> Result<Vec<(String, usize)>> {
    report
        .outputs
        .iter()
        .map(|(p, d)| Ok((p.clone(), audit(d)?.k)))
        .collect()
}
