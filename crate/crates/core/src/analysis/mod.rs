//! Posterior summaries and sparsity-recovery metrics.
//!
//! In the metrics a *sparse* entry is the positive class: recall is the
//! fraction of truly zero entries found, specificity the fraction of truly
//! nonzero entries kept.

mod graph;

pub use graph::{bootstrap_edge_interval, edge_probabilities, export_dot, EdgeGraph};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::spectral_norm;
use crate::model_space::SparsityModel;
use crate::sampler::Chain;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SparsityMetrics {
    pub rmse: f64,
    pub specificity: f64,
    pub recall: f64,
    /// `None` when no entry was predicted sparse.
    pub precision: Option<f64>,
    pub f1: f64,
}

/// Confusion counts with sparse as positive.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn from_masks(est: &SparsityModel, truth: &SparsityModel) -> Self {
        let mut c = Self::default();
        for (&e, &t) in est.bitmap().iter().zip(truth.bitmap()) {
            match (!e, !t) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
        c
    }
}

fn check_state_count(chain: &Chain, burn_in: usize) -> Result<()> {
    if burn_in >= chain.len() {
        return Err(Error::InvalidArgument(format!(
            "burn-in {burn_in} leaves no samples in a chain of length {}",
            chain.len()
        )));
    }
    Ok(())
}

/// Entrywise mean of the post-burn-in samples.
pub fn posterior_mean(chain: &Chain, burn_in: usize) -> Result<DMatrix<f64>> {
    check_state_count(chain, burn_in)?;
    let kept = chain.retained(burn_in);
    let dx = kept[0].a.nrows();
    let mut sum = DMatrix::zeros(dx, dx);
    for s in kept {
        sum += &s.a;
    }
    Ok(sum / kept.len() as f64)
}

/// Majority vote: an entry is sparse iff it is sparse in strictly more than
/// half of the post-burn-in samples (ties stay dense).
pub fn classify_sparsity(chain: &Chain, burn_in: usize) -> Result<SparsityModel> {
    check_state_count(chain, burn_in)?;
    let kept = chain.retained(burn_in);
    let dx = kept[0].model.dx();
    let mut sparse_votes = vec![0usize; dx * dx];
    for s in kept {
        for (v, &dense) in sparse_votes.iter_mut().zip(s.model.bitmap()) {
            *v += !dense as usize;
        }
    }
    let n = kept.len();
    Ok(SparsityModel::from_bitmap(
        dx,
        sparse_votes.iter().map(|&v| 2 * v <= n).collect(),
    ))
}

pub fn compute_metrics(
    est_mask: &SparsityModel,
    true_mask: &SparsityModel,
    a_est: &DMatrix<f64>,
    a_true: &DMatrix<f64>,
) -> Result<SparsityMetrics> {
    let dx = true_mask.dx();
    if est_mask.dx() != dx || a_est.shape() != (dx, dx) || a_true.shape() != (dx, dx) {
        return Err(Error::Dimension("metric inputs have inconsistent sizes".into()));
    }
    let c = Confusion::from_masks(est_mask, true_mask);
    let ratio = |num: usize, den: usize| if den == 0 { 1.0 } else { num as f64 / den as f64 };
    let recall = ratio(c.tp, c.tp + c.fn_);
    let specificity = ratio(c.tn, c.tn + c.fp);
    let precision = (c.tp + c.fp > 0).then(|| c.tp as f64 / (c.tp + c.fp) as f64);
    let f1 = match precision {
        Some(p) if p + recall > 0.0 => 2.0 * p * recall / (p + recall),
        Some(_) => 0.0,
        // Nothing predicted sparse: perfect only if nothing was sparse.
        None => {
            if c.tp + c.fn_ == 0 {
                1.0
            } else {
                0.0
            }
        }
    };
    let rmse = ((a_est - a_true).map(|v| v * v).sum() / (dx * dx) as f64).sqrt();
    Ok(SparsityMetrics {
        rmse,
        specificity,
        recall,
        precision,
        f1,
    })
}

/// Metrics averaged over runs; precision averages only the runs where it is
/// defined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub runs: usize,
    pub rmse: f64,
    pub specificity: f64,
    pub recall: f64,
    pub precision: Option<f64>,
    pub f1: f64,
}

impl MetricsSummary {
    pub fn mean(metrics: &[SparsityMetrics]) -> Option<Self> {
        if metrics.is_empty() {
            return None;
        }
        let n = metrics.len() as f64;
        let avg = |f: fn(&SparsityMetrics) -> f64| metrics.iter().map(f).sum::<f64>() / n;
        let precisions: Vec<f64> = metrics.iter().filter_map(|m| m.precision).collect();
        Some(Self {
            runs: metrics.len(),
            rmse: avg(|m| m.rmse),
            specificity: avg(|m| m.specificity),
            recall: avg(|m| m.recall),
            precision: (!precisions.is_empty()).then(|| precisions.iter().sum::<f64>() / precisions.len() as f64),
            f1: avg(|m| m.f1),
        })
    }
}

/// Per-iteration spectral norm of `A_n` and number of sparse entries of `M_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceDiagnostics {
    pub spectral_norms: Vec<f64>,
    pub sparse_counts: Vec<usize>,
}

pub fn trace_diagnostics(chain: &Chain) -> TraceDiagnostics {
    TraceDiagnostics {
        spectral_norms: chain.states.iter().map(|s| spectral_norm(&s.a)).collect(),
        sparse_counts: chain.states.iter().map(|s| s.model.n_sparse()).collect(),
    }
}
