//! Reversible-jump MCMC for sparse transition matrices in linear-Gaussian
//! state-space models.
//!
//! The sampler explores the joint space of sparsity patterns `M` and
//! transition matrices `A` of
//!
//! ```text
//! x_t = A x_{t-1} + q_t,   q_t ~ N(0, Q)
//! y_t = H x_t + r_t,       r_t ~ N(0, R)
//! ```
//!
//! with `H`, `Q`, `R` and the initial state law known. Each iteration runs a
//! single Kalman filter. Zero entries of `A` are read as absent Granger-causal
//! links between state components.
//!
//! ```no_run
//! use sparj::{sparj_run, simulate, KnownParams, SamplerConfig};
//! use nalgebra::{DMatrix, DVector};
//!
//! let known = KnownParams {
//!     h: DMatrix::identity(2, 2),
//!     q: DMatrix::identity(2, 2),
//!     r: DMatrix::identity(2, 2),
//!     x0_mean: DVector::from_element(2, 1.0),
//!     p0: DMatrix::identity(2, 2) * 1e-8,
//! };
//! let a = DMatrix::from_row_slice(2, 2, &[0.8, 0.0, 0.3, 0.5]);
//! let mut rng = sparj::rng_from_seed(7);
//! let (_, y) = simulate(&known.with_a(a.clone()), 100, &mut rng).unwrap();
//! let chain = sparj_run(&known, &a, &y, &SamplerConfig::default(), &mut rng).unwrap();
//! println!("jump acceptance {:.3}", chain.jump_acceptance_rate());
//! ```

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod em;
mod error;
pub mod experiment;
pub mod lgssm;
pub mod linalg;
pub mod model_space;
pub mod rng;
pub mod sampler;

pub use analysis::{
    classify_sparsity, compute_metrics, edge_probabilities, export_dot, posterior_mean, EdgeGraph, SparsityMetrics,
};
pub use em::{em_estimate, EmOptions, EmResult};
pub use error::{Error, Result};
pub use lgssm::{
    kalman_filter, log_likelihood, rts_smoother, simulate, FilterResult, KnownParams, LikelihoodEvaluator, ModelParams,
    ObservationSeries, SmootherResult, StateSeries,
};
pub use model_space::{k_adjacency, propose_model, JumpKind, ModelProposal, SparsityModel};
pub use rng::{derive_seed, rng_from_seed, SparjRng};
pub use sampler::{dense_mcmc_run, sparj_run, sparj_step, Chain, ChainState, Sampler, SamplerConfig};
