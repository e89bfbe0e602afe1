//! The reversible-jump sampler over transition matrices and sparsity models.
//!
//! Each iteration proposes a model (retain / sparser / denser), maps or walks
//! the transition matrix into that model, evaluates one Kalman filter and
//! accepts or rejects model and matrix jointly.

mod io;
mod laplace;

pub use io::{read_chain_jsonl, write_chain_jsonl, ChainRecord};
pub use laplace::LaplaceDist;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lgssm::{KnownParams, LikelihoodEvaluator, ObservationSeries};
use crate::linalg::l1_norm;
use crate::model_space::{log_correction, propose_model, JumpKind, ModelProposal, SparsityModel};

/// Tuning parameters. Defaults follow the recommended values: `π₀ = 0.8`,
/// `π₋₁ = 0.5`, `λ_j = 0.2`, `σ = σ_c = 0.1`, `λ = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    /// Probability of keeping the current model.
    pub pi0: f64,
    /// Probability that a model jump goes sparser.
    pub pi_minus1: f64,
    /// Laplace prior rate on the entries of `A`.
    pub lambda_prior: f64,
    /// Truncated Poisson rate for the jump length.
    pub lambda_j: f64,
    /// Random-walk scale within a model.
    pub sigma_walk: f64,
    /// Scale of the Laplace completion distribution for new dense entries.
    pub sigma_completion: f64,
    pub n_iters: usize,
    pub burn_in: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            pi0: 0.8,
            pi_minus1: 0.5,
            lambda_prior: 1.0,
            lambda_j: 0.2,
            sigma_walk: 0.1,
            sigma_completion: 0.1,
            n_iters: 15_000,
            burn_in: 5_000,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        let prob = |v: f64, name: &str| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{name} = {v} is not a probability")))
            }
        };
        prob(self.pi0, "pi0")?;
        prob(self.pi_minus1, "pi_minus1")?;
        if !(self.lambda_prior >= 0.0) {
            return Err(Error::InvalidArgument("lambda_prior must be non-negative".into()));
        }
        if !(0.0..1.0).contains(&self.lambda_j) {
            return Err(Error::InvalidArgument("lambda_j must lie in [0, 1)".into()));
        }
        if !(self.sigma_walk > 0.0) || !(self.sigma_completion > 0.0) {
            return Err(Error::InvalidArgument(
                "walk and completion scales must be positive".into(),
            ));
        }
        if self.n_iters == 0 {
            return Err(Error::InvalidArgument("n_iters must be positive".into()));
        }
        if self.burn_in >= self.n_iters {
            return Err(Error::InvalidArgument("burn_in must be smaller than n_iters".into()));
        }
        Ok(())
    }
}

/// One sample `(A_n, M_n, l_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub a: DMatrix<f64>,
    pub model: SparsityModel,
    pub log_lik: f64,
}

impl ChainState {
    /// True when every entry outside the model is exactly `0.0`.
    pub fn respects_model(&self) -> bool {
        let dx = self.model.dx();
        (0..dx).all(|i| (0..dx).all(|j| self.model.is_dense(i, j) || self.a[(i, j)] == 0.0))
    }
}

/// The sampler output plus acceptance bookkeeping.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Chain {
    pub states: Vec<ChainState>,
    pub propose_count_within: u64,
    pub accept_count_within: u64,
    pub propose_count_jump: u64,
    pub accept_count_jump: u64,
    /// Kalman filter runs made by the iterations (excludes the initial one).
    pub filter_evaluations: u64,
    /// Proposals whose filter failed and were rejected outright.
    pub filter_failures: u64,
}

impl Chain {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn within_acceptance_rate(&self) -> f64 {
        self.accept_count_within as f64 / self.propose_count_within.max(1) as f64
    }

    pub fn jump_acceptance_rate(&self) -> f64 {
        self.accept_count_jump as f64 / self.propose_count_jump.max(1) as f64
    }

    /// Post-burn-in states.
    pub fn retained(&self, burn_in: usize) -> &[ChainState] {
        &self.states[burn_in.min(self.states.len())..]
    }
}

/// Per-iteration diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub kind: JumpKind,
    pub jump_len: usize,
    pub log_accept_ratio: f64,
    pub accepted: bool,
    pub filter_failed: bool,
}

/// `λ (‖A_prev‖₁ - ‖A_prop‖₁)`: the log-density ratio of an entrywise Laplace prior.
pub fn lambda_penalty(a_prev: &DMatrix<f64>, a_prop: &DMatrix<f64>, lambda_prior: f64) -> Result<f64> {
    if a_prev.shape() != a_prop.shape() {
        return Err(Error::Dimension(format!(
            "penalty arguments have shapes {:?} and {:?}",
            a_prev.shape(),
            a_prop.shape()
        )));
    }
    if lambda_prior == 0.0 {
        return Ok(0.0);
    }
    Ok(lambda_prior * (l1_norm(a_prev) - l1_norm(a_prop)))
}

/// Proposes `A'` under `proposal`, returning it with the completion term `c`.
///
/// * retain: every dense entry takes an independent `Laplace(a, σ)` step;
/// * sparser: the removed entries are zeroed and `c = Σ ln g(a_removed)`;
/// * denser: new entries are drawn `u ~ g` and `c = -Σ ln g(u)`;
///
/// with `g = Laplace(0, σ_c)`. Untouched entries are copied verbatim.
pub fn propose_parameter<R: Rng + ?Sized>(
    a_prev: &DMatrix<f64>,
    proposal: &ModelProposal,
    sigma_walk: f64,
    sigma_completion: f64,
    rng: &mut R,
) -> Result<(DMatrix<f64>, f64)> {
    let model = &proposal.proposed;
    let dx = model.dx();
    if a_prev.nrows() != dx || a_prev.ncols() != dx {
        return Err(Error::Dimension(format!(
            "A is {}x{}, model is {dx}x{dx}",
            a_prev.nrows(),
            a_prev.ncols()
        )));
    }
    // Dense set of the previous model, reconstructed from the proposal.
    let was_dense = |i: usize, j: usize| match proposal.kind {
        JumpKind::Retain => model.is_dense(i, j),
        JumpKind::Sparser => model.is_dense(i, j) || proposal.changed_indices.contains(&(i, j)),
        JumpKind::Denser => model.is_dense(i, j) && !proposal.changed_indices.contains(&(i, j)),
    };
    for i in 0..dx {
        for j in 0..dx {
            if a_prev[(i, j)] != 0.0 && !was_dense(i, j) {
                return Err(Error::InvalidArgument(format!(
                    "A[{i},{j}] = {} is nonzero outside the previous model",
                    a_prev[(i, j)]
                )));
            }
        }
    }

    let mut a = a_prev.clone();
    let completion = LaplaceDist::new(0.0, sigma_completion);
    let c = match proposal.kind {
        JumpKind::Retain => {
            let walk = LaplaceDist::new(0.0, sigma_walk);
            for &(i, j) in model.dense_indices() {
                a[(i, j)] += walk.sample(rng);
            }
            0.0
        }
        JumpKind::Sparser => proposal
            .changed_indices
            .iter()
            .map(|&(i, j)| {
                let v = a[(i, j)];
                a[(i, j)] = 0.0;
                completion.ln_pdf(v)
            })
            .sum(),
        JumpKind::Denser => proposal
            .changed_indices
            .iter()
            .map(|&(i, j)| {
                let u = completion.sample(rng);
                a[(i, j)] = u;
                -completion.ln_pdf(u)
            })
            .sum(),
    };
    Ok((a, c))
}

/// Runs chains for fixed known parameters and observations.
#[derive(Debug, Clone)]
pub struct Sampler {
    evaluator: LikelihoodEvaluator,
    config: SamplerConfig,
}

impl Sampler {
    pub fn new(known: &KnownParams, y: &ObservationSeries, config: SamplerConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            evaluator: LikelihoodEvaluator::new(known, y)?,
            config,
        })
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.config
    }

    /// Initial state: fully dense model at `a0`.
    pub fn initial_state(&mut self, a0: &DMatrix<f64>) -> Result<ChainState> {
        let log_lik = self.evaluator.log_likelihood(a0)?;
        if !log_lik.is_finite() {
            return Err(Error::BadInitialization);
        }
        Ok(ChainState {
            a: a0.clone(),
            model: SparsityModel::full(a0.nrows()),
            log_lik,
        })
    }

    /// One iteration. Returns the next state (the input state on rejection).
    pub fn step<R: Rng + ?Sized>(&mut self, state: &ChainState, rng: &mut R) -> Result<(ChainState, StepInfo)> {
        let cfg = &self.config;
        let proposal = propose_model(&state.model, cfg.pi0, cfg.pi_minus1, cfg.lambda_j, rng);
        let (a_prop, c_completion) = propose_parameter(&state.a, &proposal, cfg.sigma_walk, cfg.sigma_completion, rng)?;
        let correction = match proposal.kind {
            JumpKind::Retain => 0.0,
            kind => log_correction(
                kind,
                proposal.jump_len(),
                state.model.n_dense(),
                state.model.n_sparse(),
                cfg.pi_minus1,
                cfg.lambda_j,
                state.model.size(),
            )?,
        };
        let (l_prop, filter_failed) = match self.evaluator.log_likelihood(&a_prop) {
            Ok(l) => (l, false),
            Err(Error::Dimension(msg)) => return Err(Error::Dimension(msg)),
            Err(_) => (f64::NEG_INFINITY, true),
        };
        let log_ar =
            l_prop - state.log_lik + lambda_penalty(&state.a, &a_prop, cfg.lambda_prior)? + c_completion + correction;
        let u: f64 = rng.random();
        let accepted = !filter_failed && u.ln() < log_ar;
        let info = StepInfo {
            kind: proposal.kind,
            jump_len: proposal.jump_len(),
            log_accept_ratio: log_ar,
            accepted,
            filter_failed,
        };
        let next = if accepted {
            ChainState {
                a: a_prop,
                model: proposal.proposed,
                log_lik: l_prop,
            }
        } else {
            state.clone()
        };
        Ok((next, info))
    }

    /// Runs `n_iters` iterations from the fully dense model at `a0`.
    pub fn run<R: Rng + ?Sized>(&mut self, a0: &DMatrix<f64>, rng: &mut R) -> Result<Chain> {
        let mut state = self.initial_state(a0)?;
        let n = self.config.n_iters;
        let mut chain = Chain {
            states: Vec::with_capacity(n),
            ..Chain::default()
        };
        let evals_before = self.evaluator.evaluations();
        for _ in 0..n {
            let (next, info) = self.step(&state, rng)?;
            if info.kind == JumpKind::Retain {
                chain.propose_count_within += 1;
                chain.accept_count_within += info.accepted as u64;
            } else {
                chain.propose_count_jump += 1;
                chain.accept_count_jump += info.accepted as u64;
            }
            chain.filter_failures += info.filter_failed as u64;
            chain.states.push(next.clone());
            state = next;
        }
        chain.filter_evaluations = self.evaluator.evaluations() - evals_before;
        Ok(chain)
    }
}

/// One sampler iteration as a standalone call.
pub fn sparj_step<R: Rng + ?Sized>(
    state: &ChainState,
    known: &KnownParams,
    y: &ObservationSeries,
    config: &SamplerConfig,
    rng: &mut R,
) -> Result<(ChainState, StepInfo)> {
    Sampler::new(known, y, config.clone())?.step(state, rng)
}

/// Runs the reversible-jump sampler from the fully dense model at `a0`.
pub fn sparj_run<R: Rng + ?Sized>(
    known: &KnownParams,
    a0: &DMatrix<f64>,
    y: &ObservationSeries,
    config: &SamplerConfig,
    rng: &mut R,
) -> Result<Chain> {
    Sampler::new(known, y, config.clone())?.run(a0, rng)
}

/// Reference random-walk sampler that never leaves the fully dense model.
///
/// This is the reversible-jump loop with `π₀ = 1`, so it consumes random
/// numbers exactly as `sparj_run` does under that setting.
pub fn dense_mcmc_run<R: Rng + ?Sized>(
    known: &KnownParams,
    a0: &DMatrix<f64>,
    y: &ObservationSeries,
    config: &SamplerConfig,
    rng: &mut R,
) -> Result<Chain> {
    let config = SamplerConfig {
        pi0: 1.0,
        ..config.clone()
    };
    Sampler::new(known, y, config)?.run(a0, rng)
}
