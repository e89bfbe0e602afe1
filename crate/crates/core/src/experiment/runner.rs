use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    bootstrap_edge_interval, classify_sparsity, compute_metrics, export_dot, posterior_mean, trace_diagnostics,
    EdgeGraph, MetricsSummary, SparsityMetrics,
};
use crate::error::{Error, Result};
use crate::rng::{derive_labeled_seed, rng_from_seed};
use crate::sampler::{dense_mcmc_run, sparj_run, write_chain_jsonl, Chain};

use super::config::{ExperimentSpec, Regime};
use super::regime::{build_regime, initial_transition};

const BOOTSTRAP_LEVEL: f64 = 0.95;
const BOOTSTRAP_DRAWS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    SpaRJ,
    Mcmc,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::SpaRJ => "SpaRJ",
            Method::Mcmc => "MCMC",
        })
    }
}

/// Outcome of one method on one dataset. A failed run keeps its error
/// message and carries no results.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub run_id: usize,
    pub method: Method,
    pub t_len: usize,
    pub dx: usize,
    pub metrics: Option<SparsityMetrics>,
    /// Sampler wall time, excluding data generation and initialization.
    pub wall_time_seconds: f64,
    pub within_acceptance: f64,
    pub jump_acceptance: f64,
    pub filter_failures: u64,
    /// Post-burn-in frequency with which each entry is dense.
    pub edge_frequencies: Option<DMatrix<f64>>,
    pub posterior_mean: Option<DMatrix<f64>>,
    pub chain_path: Option<PathBuf>,
    pub error: Option<String>,
}

impl RunRecord {
    fn failed(run_id: usize, method: Method, t_len: usize, dx: usize, err: &Error) -> Self {
        Self {
            run_id,
            method,
            t_len,
            dx,
            metrics: None,
            wall_time_seconds: 0.0,
            within_acceptance: 0.0,
            jump_acceptance: 0.0,
            filter_failures: 0,
            edge_frequencies: None,
            posterior_mean: None,
            chain_path: None,
            error: Some(err.to_string()),
        }
    }
}

fn dense_frequencies(chain: &Chain, burn_in: usize) -> DMatrix<f64> {
    let kept = chain.retained(burn_in);
    let dx = kept[0].model.dx();
    let mut freq = DMatrix::zeros(dx, dx);
    for s in kept {
        for &(i, j) in s.model.dense_indices() {
            freq[(i, j)] += 1.0;
        }
    }
    freq / kept.len() as f64
}

fn write_trace_csv(chain: &Chain, path: &Path) -> Result<()> {
    let diag = trace_diagnostics(chain);
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["iter", "spectral_norm", "sparse_count"])?;
    for (n, (norm, count)) in diag.spectral_norms.iter().zip(&diag.sparse_counts).enumerate() {
        w.write_record([(n + 1).to_string(), norm.to_string(), count.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Generates dataset `run`, initializes by EM and runs SpaRJ (and the dense
/// baseline if requested). Chains and traces go to `out_dir` when given.
pub fn execute_run(spec: &ExperimentSpec, run: usize, t_len: usize, out_dir: Option<&Path>) -> Vec<RunRecord> {
    let mut methods = vec![Method::SpaRJ];
    if spec.baseline {
        methods.push(Method::Mcmc);
    }
    let setup = build_regime(spec, run, t_len).and_then(|inst| {
        let mut rng = rng_from_seed(derive_labeled_seed(spec.seed, run as u64, "init"));
        let a0 = initial_transition(&inst.known, &inst.y, spec.em_iters, &mut rng)?;
        Ok((inst, a0))
    });
    let (inst, a0) = match setup {
        Ok(v) => v,
        Err(e) => {
            return methods
                .iter()
                .map(|&m| RunRecord::failed(run, m, t_len, spec.dx, &e))
                .collect()
        }
    };

    methods
        .into_iter()
        .map(|method| {
            let one = || -> Result<RunRecord> {
                let label = match method {
                    Method::SpaRJ => "sparj",
                    Method::Mcmc => "mcmc",
                };
                let mut rng = rng_from_seed(derive_labeled_seed(spec.seed, run as u64, label));
                let start = Instant::now();
                let chain = match method {
                    Method::SpaRJ => sparj_run(&inst.known, &a0, &inst.y, &spec.sampler, &mut rng)?,
                    Method::Mcmc => dense_mcmc_run(&inst.known, &a0, &inst.y, &spec.sampler, &mut rng)?,
                };
                let wall = start.elapsed().as_secs_f64();

                let burn_in = spec.sampler.burn_in;
                let a_mean = posterior_mean(&chain, burn_in)?;
                let metrics = match (&inst.a_true, &inst.true_mask) {
                    (Some(a_true), Some(mask)) => {
                        let est = classify_sparsity(&chain, burn_in)?;
                        Some(compute_metrics(&est, mask, &a_mean, a_true)?)
                    }
                    _ => None,
                };
                let chain_path = match (out_dir, spec.write_chains) {
                    (Some(dir), true) => {
                        let stem = match method {
                            Method::SpaRJ => format!("{run}"),
                            Method::Mcmc => format!("mcmc_{run}"),
                        };
                        let path = dir.join(format!("chain_{stem}.jsonl"));
                        write_chain_jsonl(&chain, BufWriter::new(File::create(&path)?), spec.compact_chains)?;
                        write_trace_csv(&chain, &dir.join(format!("trace_{stem}.csv")))?;
                        Some(path)
                    }
                    _ => None,
                };
                Ok(RunRecord {
                    run_id: run,
                    method,
                    t_len,
                    dx: inst.known.state_dim(),
                    metrics,
                    wall_time_seconds: wall,
                    within_acceptance: chain.within_acceptance_rate(),
                    jump_acceptance: chain.jump_acceptance_rate(),
                    filter_failures: chain.filter_failures,
                    edge_frequencies: Some(dense_frequencies(&chain, burn_in)),
                    posterior_mean: Some(a_mean),
                    chain_path,
                    error: None,
                })
            };
            one().unwrap_or_else(|e| RunRecord::failed(run, method, t_len, spec.dx, &e))
        })
        .collect()
}

/// All `spec.n_runs` runs at one series length, in parallel on `spec.threads`
/// workers. Results are ordered by run id and do not depend on the thread
/// count.
pub fn execute_runs(spec: &ExperimentSpec, t_len: usize, out_dir: Option<&Path>) -> Result<Vec<RunRecord>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.threads)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let nested: Vec<Vec<RunRecord>> = pool.install(|| {
        (0..spec.n_runs)
            .into_par_iter()
            .map(|run| execute_run(spec, run, t_len, out_dir))
            .collect()
    });
    Ok(nested.into_iter().flatten().collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: Method,
    pub dx: usize,
    pub t_len: usize,
    pub n_failed: usize,
    /// `None` without ground truth or when every run failed.
    pub metrics: Option<MetricsSummary>,
    pub mean_time_seconds: f64,
}

pub fn summarize(records: &[RunRecord]) -> Vec<SummaryRow> {
    [Method::SpaRJ, Method::Mcmc]
        .into_iter()
        .filter(|m| records.iter().any(|r| r.method == *m))
        .map(|method| {
            let rows: Vec<&RunRecord> = records.iter().filter(|r| r.method == method).collect();
            let ok: Vec<&&RunRecord> = rows.iter().filter(|r| r.error.is_none()).collect();
            let metrics: Vec<SparsityMetrics> = ok.iter().filter_map(|r| r.metrics).collect();
            SummaryRow {
                method,
                dx: rows[0].dx,
                t_len: rows[0].t_len,
                n_failed: rows.len() - ok.len(),
                metrics: MetricsSummary::mean(&metrics),
                mean_time_seconds: if ok.is_empty() {
                    f64::NAN
                } else {
                    ok.iter().map(|r| r.wall_time_seconds).sum::<f64>() / ok.len() as f64
                },
            }
        })
        .collect()
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x:.6}"))
}

pub fn write_summary_csv(rows: &[SummaryRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["method", "dx", "rmse", "spec", "recall", "prec", "f1", "time_s"])?;
    for r in rows {
        let m = r.metrics;
        w.write_record([
            r.method.to_string(),
            r.dx.to_string(),
            opt(m.map(|m| m.rmse)),
            opt(m.map(|m| m.specificity)),
            opt(m.map(|m| m.recall)),
            opt(m.and_then(|m| m.precision)),
            opt(m.map(|m| m.f1)),
            format!("{:.4}", r.mean_time_seconds),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_runs_csv(records: &[RunRecord], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "run_id",
        "method",
        "T",
        "dx",
        "rmse",
        "spec",
        "recall",
        "prec",
        "f1",
        "time_s",
        "acc_within",
        "acc_jump",
        "filter_failures",
        "chain",
        "error",
    ])?;
    for r in records {
        let m = r.metrics;
        w.write_record([
            r.run_id.to_string(),
            r.method.to_string(),
            r.t_len.to_string(),
            r.dx.to_string(),
            opt(m.map(|m| m.rmse)),
            opt(m.map(|m| m.specificity)),
            opt(m.map(|m| m.recall)),
            opt(m.and_then(|m| m.precision)),
            opt(m.map(|m| m.f1)),
            format!("{:.4}", r.wall_time_seconds),
            format!("{:.4}", r.within_acceptance),
            format!("{:.4}", r.jump_acceptance),
            r.filter_failures.to_string(),
            r.chain_path
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default(),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Edge graph averaged over the successful SpaRJ runs.
fn pooled_graph(spec: &ExperimentSpec, records: &[RunRecord]) -> Result<Option<(EdgeGraph, Vec<DMatrix<f64>>)>> {
    let freqs: Vec<DMatrix<f64>> = records
        .iter()
        .filter(|r| r.method == Method::SpaRJ)
        .filter_map(|r| r.edge_frequencies.clone())
        .collect();
    let Some(first) = freqs.first() else {
        return Ok(None);
    };
    let mut mean = DMatrix::zeros(first.nrows(), first.ncols());
    for f in &freqs {
        mean += f;
    }
    mean /= freqs.len() as f64;
    let labels = (spec.regime == Regime::RealCsv).then(|| spec.columns.clone());
    Ok(Some((EdgeGraph::new(mean, labels)?, freqs)))
}

fn write_edges_csv(spec: &ExperimentSpec, graph: &EdgeGraph, freqs: &[DMatrix<f64>], path: &Path) -> Result<()> {
    let mut rng = rng_from_seed(derive_labeled_seed(spec.seed, 0, "bootstrap"));
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["from", "to", "prob", "lo", "hi"])?;
    for i in 0..graph.dx {
        for j in 0..graph.dx {
            let per_chain: Vec<f64> = freqs.iter().map(|f| f[(i, j)]).collect();
            let (lo, hi) = match bootstrap_edge_interval(&per_chain, BOOTSTRAP_LEVEL, BOOTSTRAP_DRAWS, &mut rng) {
                Ok((lo, hi)) => (Some(lo), Some(hi)),
                Err(_) => (None, None),
            };
            w.write_record([
                graph.labels[j].clone(),
                graph.labels[i].clone(),
                format!("{:.6}", graph.prob[(i, j)]),
                opt(lo),
                opt(hi),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct LengthResult {
    pub t_len: usize,
    pub dir: PathBuf,
    pub records: Vec<RunRecord>,
    pub summary: Vec<SummaryRow>,
    pub graph: Option<EdgeGraph>,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub results: Vec<LengthResult>,
}

/// Runs the experiment and writes `summary.csv`, `runs.csv`, `graph.dot`,
/// `edges.csv` and per-run chain and trace files under `spec.output_dir`
/// (one `T<len>` subdirectory per length for `VarLength`).
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    spec.validate()?;
    let lengths = if spec.regime == Regime::VarLength {
        spec.lengths.clone()
    } else {
        vec![spec.t_len]
    };
    let mut results = Vec::new();
    for &t_len in &lengths {
        let dir = if spec.regime == Regime::VarLength {
            spec.output_dir.join(format!("T{t_len}"))
        } else {
            spec.output_dir.clone()
        };
        fs::create_dir_all(&dir)?;
        let records = execute_runs(spec, t_len, Some(&dir))?;
        let summary = summarize(&records);
        write_summary_csv(&summary, &dir.join("summary.csv"))?;
        write_runs_csv(&records, &dir.join("runs.csv"))?;
        let graph = match pooled_graph(spec, &records)? {
            Some((graph, freqs)) => {
                let mut f = File::create(dir.join("graph.dot"))?;
                f.write_all(export_dot(&graph, spec.dot_threshold, spec.dot_self_loops).as_bytes())?;
                write_edges_csv(spec, &graph, &freqs, &dir.join("edges.csv"))?;
                Some(graph)
            }
            None => None,
        };
        results.push(LengthResult {
            t_len,
            dir,
            records,
            summary,
            graph,
        });
    }
    Ok(ExperimentReport { results })
}
