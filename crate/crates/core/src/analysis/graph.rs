//! Edge-probability graphs: entry `(i, j)` of `A` being dense is read as an
//! edge `j → i` (state `j` Granger-causes state `i` at lag one).

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::sampler::Chain;

/// Pen width drawn for an edge of probability one.
pub const MAX_PENWIDTH: f64 = 5.0;

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeGraph {
    pub dx: usize,
    /// `prob[(i, j)]` is the probability of the edge `j → i`.
    pub prob: DMatrix<f64>,
    pub labels: Vec<String>,
}

impl EdgeGraph {
    pub fn new(prob: DMatrix<f64>, labels: Option<Vec<String>>) -> Result<Self> {
        let dx = prob.nrows();
        if prob.ncols() != dx {
            return Err(Error::Dimension("edge probability matrix must be square".into()));
        }
        if prob.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidArgument("edge probabilities must lie in [0, 1]".into()));
        }
        let labels = labels.unwrap_or_else(|| (1..=dx).map(|i| format!("x{i}")).collect());
        if labels.len() != dx {
            return Err(Error::Dimension(format!("{} labels for {dx} nodes", labels.len())));
        }
        Ok(Self { dx, prob, labels })
    }
}

/// Fraction of pooled post-burn-in samples in which each entry is dense.
pub fn edge_probabilities(chains: &[Chain], burn_in: usize, labels: Option<Vec<String>>) -> Result<EdgeGraph> {
    let first = chains
        .first()
        .and_then(|c| c.states.first())
        .ok_or_else(|| Error::InvalidArgument("need at least one non-empty chain".into()))?;
    let dx = first.model.dx();
    let mut counts = vec![0usize; dx * dx];
    let mut total = 0usize;
    for chain in chains {
        for s in chain.retained(burn_in) {
            if s.model.dx() != dx {
                return Err(Error::Dimension("chains have different state dimensions".into()));
            }
            for (c, &dense) in counts.iter_mut().zip(s.model.bitmap()) {
                *c += dense as usize;
            }
            total += 1;
        }
    }
    if total == 0 {
        return Err(Error::InvalidArgument("burn-in leaves no samples".into()));
    }
    let prob = DMatrix::from_fn(dx, dx, |i, j| counts[i * dx + j] as f64 / total as f64);
    EdgeGraph::new(prob, labels)
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Percentile bootstrap interval for the mean of per-chain edge frequencies.
pub fn bootstrap_edge_interval<R: Rng + ?Sized>(
    frequencies: &[f64],
    level: f64,
    n_boot: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    if frequencies.len() < 2 {
        return Err(Error::InvalidArgument("bootstrap needs at least two chains".into()));
    }
    if !(0.0..1.0).contains(&level) || n_boot == 0 {
        return Err(Error::InvalidArgument(
            "level must lie in [0, 1) and n_boot be positive".into(),
        ));
    }
    let n = frequencies.len();
    let mut means: Vec<f64> = (0..n_boot)
        .map(|_| (0..n).map(|_| frequencies[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let alpha = 1.0 - level;
    Ok((quantile(&means, alpha / 2.0), quantile(&means, 1.0 - alpha / 2.0)))
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Graphviz digraph with an edge `j → i` for every entry with probability at
/// least `threshold` (and above zero); pen width scales with probability.
pub fn export_dot(graph: &EdgeGraph, threshold: f64, include_self_loops: bool) -> String {
    let mut out = String::from("digraph sparj {\n");
    for label in &graph.labels {
        let _ = writeln!(out, "  {};", quote(label));
    }
    for i in 0..graph.dx {
        for j in 0..graph.dx {
            let p = graph.prob[(i, j)];
            if p <= 0.0 || p < threshold || (i == j && !include_self_loops) {
                continue;
            }
            let _ = writeln!(
                out,
                "  {} -> {} [penwidth={:.3}, label=\"{:.2}\"];",
                quote(&graph.labels[j]),
                quote(&graph.labels[i]),
                MAX_PENWIDTH * p,
                p
            );
        }
    }
    out.push_str("}\n");
    out
}
