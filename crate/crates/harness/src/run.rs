use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use gradreg::algorithms::{
    baseline_psgd_traced, gr_convex_traced, gr_sc_traced, pssm_sc_traced, Trace,
};
use gradreg::{
    replicate_seed, seeded_stream, BaselineConfig, ConvergenceRecord, GrConvexConfig, GrScConfig, PssmConfig,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{AlgorithmSpec, ExperimentConfig, Resolved};
use crate::error::{HarnessError, Result};

pub const RECORD_COLUMNS: [&str; 6] = ["experiment_id", "replicate", "oracle_calls", "grad_norm", "function_gap", "seed"];

pub const SUMMARY_COLUMNS: [&str; 7] =
    ["experiment_id", "budget", "oracle_calls", "replicates", "mean_grad_norm", "std_error", "mean_function_gap"];

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses rayon's default.
    pub threads: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReplicateRecord {
    pub replicate: u32,
    pub record: ConvergenceRecord<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub experiment_id: String,
    /// Iteration count `T` the run was configured with.
    pub budget: u64,
    pub oracle_calls: u64,
    pub replicates: u32,
    pub mean_grad_norm: f64,
    /// Standard error of the mean grad norm.
    pub std_error: f64,
    pub mean_function_gap: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub config: ExperimentConfig,
    pub budget: u64,
    pub records: Vec<ReplicateRecord>,
    pub summary: Vec<SummaryRow>,
}

pub fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(HarnessError::Config("--threads must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| HarnessError::Pool(e.to_string()))
}

/// Runs every replicate of `config` and aggregates the checkpoints.
pub fn run_experiment(config: &ExperimentConfig, options: &RunOptions) -> Result<RunOutput> {
    Ok(sweep(config, &[], options)?.remove(0))
}

/// Runs `config` once per budget (an empty list means the configured budget).
/// All configurations are resolved before the first replicate starts.
pub fn sweep(config: &ExperimentConfig, budgets: &[u64], options: &RunOptions) -> Result<Vec<RunOutput>> {
    let configs: Vec<ExperimentConfig> = if budgets.is_empty() {
        vec![config.clone()]
    } else {
        budgets.iter().map(|&t| config.with_iterations(t)).collect()
    };
    let resolved = configs.iter().map(ExperimentConfig::resolve).collect::<Result<Vec<_>>>()?;
    let pool = thread_pool(options.threads)?;
    configs
        .iter()
        .zip(&resolved)
        .map(|(cfg, res)| {
            let records = pool.install(|| {
                (0..cfg.replicates)
                    .into_par_iter()
                    .map(|r| run_replicate(cfg, res, r).map(|record| ReplicateRecord { replicate: r, record }))
                    .collect::<Result<Vec<_>>>()
            })?;
            let summary = summarize(&cfg.id, res.iterations, &records);
            Ok(RunOutput { config: cfg.clone(), budget: res.iterations, records, summary })
        })
        .collect()
}

pub fn run_replicate(config: &ExperimentConfig, resolved: &Resolved, replicate: u32) -> Result<ConvergenceRecord<f64>> {
    let seed = replicate_seed(config.seed, replicate as u64);
    let mut stream = seeded_stream(seed);
    let inst = &resolved.instance;
    let set = inst.set();
    let x0 = set.center();
    let mut trace = Trace::new(config.checkpoints);
    match &resolved.algorithm {
        AlgorithmSpec::PssmSc { mu, iterations } => {
            let cfg = PssmConfig::new(x0, *mu, *iterations)?;
            pssm_sc_traced(&cfg, inst.oracle().as_ref(), set, &mut stream, &mut trace)?;
        }
        AlgorithmSpec::GrSc { mu, lambda, iterations, rounds } => {
            let cfg = GrScConfig::new(x0, *mu, *lambda, *iterations, rounds.expect("resolved"))?;
            gr_sc_traced(&cfg, inst.oracle(), set, &mut stream, &mut trace)?;
        }
        AlgorithmSpec::GrConvex { rho, epsilon, iterations } => {
            let cfg = GrConvexConfig { center: x0, rho: *rho, epsilon: *epsilon, iterations: iterations.expect("resolved") };
            gr_convex_traced(&cfg, inst, &mut stream, &mut trace)?;
        }
        AlgorithmSpec::BaselinePsgd { iterations, step_scale, .. } => {
            let cfg = BaselineConfig::new(x0, step_scale.expect("resolved"), *iterations)?;
            baseline_psgd_traced(&cfg, inst.oracle().as_ref(), set, &mut stream, &mut trace)?;
        }
    }
    let echo = format!("{}:{}:T={}", config.id, resolved.algorithm.name(), resolved.iterations);
    Ok(ConvergenceRecord::from_trace(trace.points(), inst, resolved.envelope, config.prox_tol, echo, seed)?)
}

/// One row per distinct oracle-call count, in increasing order.
pub fn summarize(id: &str, budget: u64, records: &[ReplicateRecord]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<u64, Vec<(f64, Option<f64>)>> = BTreeMap::new();
    for rec in records {
        for row in &rec.record.rows {
            groups.entry(row.oracle_calls).or_default().push((row.envelope_grad_norm, row.function_gap));
        }
    }
    groups
        .into_iter()
        .map(|(calls, vals)| {
            let n = vals.len() as f64;
            let mean = vals.iter().map(|v| v.0).sum::<f64>() / n;
            let var = if vals.len() > 1 {
                vals.iter().map(|v| (v.0 - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            let gaps: Option<Vec<f64>> = vals.iter().map(|v| v.1).collect();
            SummaryRow {
                experiment_id: id.to_string(),
                budget,
                oracle_calls: calls,
                replicates: vals.len() as u32,
                mean_grad_norm: mean,
                std_error: (var / n).sqrt(),
                mean_function_gap: gaps.map(|g| g.iter().sum::<f64>() / n),
            }
        })
        .collect()
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_records<W: Write>(out: W, outputs: &[RunOutput]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RECORD_COLUMNS)?;
    for o in outputs {
        for rec in &o.records {
            for row in &rec.record.rows {
                w.write_record([
                    o.config.id.clone(),
                    rec.replicate.to_string(),
                    row.oracle_calls.to_string(),
                    fmt_float(row.envelope_grad_norm),
                    row.function_gap.map(fmt_float).unwrap_or_default(),
                    rec.record.seed.to_string(),
                ])?;
            }
        }
    }
    w.flush().map_err(|e| HarnessError::io("<records>", e))?;
    Ok(())
}

pub fn write_summary<W: Write>(out: W, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.experiment_id.clone(),
            r.budget.to_string(),
            r.oracle_calls.to_string(),
            r.replicates.to_string(),
            fmt_float(r.mean_grad_norm),
            fmt_float(r.std_error),
            r.mean_function_gap.map(fmt_float).unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(|e| HarnessError::io("<summary>", e))?;
    Ok(())
}

pub fn records_csv(outputs: &[RunOutput]) -> String {
    let mut buf = Vec::new();
    write_records(&mut buf, outputs).expect("in-memory write");
    String::from_utf8(buf).expect("utf-8")
}

pub fn summary_csv(outputs: &[RunOutput]) -> String {
    let rows: Vec<SummaryRow> = outputs.iter().flat_map(|o| o.summary.iter().cloned()).collect();
    let mut buf = Vec::new();
    write_summary(&mut buf, &rows).expect("in-memory write");
    String::from_utf8(buf).expect("utf-8")
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    let file = std::fs::File::open(path).map_err(|e| HarnessError::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    let headers = r.headers()?.clone();
    if headers.iter().ne(SUMMARY_COLUMNS) {
        return Err(HarnessError::Parse {
            path: path.to_path_buf(),
            message: format!("expected columns {}", SUMMARY_COLUMNS.join(",")),
        });
    }
    let mut rows = Vec::new();
    for rec in r.deserialize() {
        let row: SummaryRow = rec.map_err(|e| HarnessError::Parse { path: path.to_path_buf(), message: e.to_string() })?;
        rows.push(row);
    }
    Ok(rows)
}

/// `records` path and the summary path beside it (`<stem>_summary.csv`).
pub fn output_paths(records: &Path) -> (PathBuf, PathBuf) {
    let stem = records.file_stem().and_then(|s| s.to_str()).unwrap_or("records");
    (records.to_path_buf(), records.with_file_name(format!("{stem}_summary.csv")))
}

/// Writes both CSV files, creating the parent directory if needed.
pub fn write_outputs(records: &Path, outputs: &[RunOutput]) -> Result<(PathBuf, PathBuf)> {
    let (rec_path, sum_path) = output_paths(records);
    if let Some(dir) = rec_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    std::fs::write(&rec_path, records_csv(outputs)).map_err(|e| HarnessError::io(&rec_path, e))?;
    std::fs::write(&sum_path, summary_csv(outputs)).map_err(|e| HarnessError::io(&sum_path, e))?;
    Ok((rec_path, sum_path))
}
