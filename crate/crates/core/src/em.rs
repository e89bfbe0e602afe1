//! Expectation–maximization for `A` and/or `Q` with the other parameters known.
//!
//! The E-step is a Kalman filter plus RTS smoother; the M-step uses the
//! closed-form maximizers built from the smoothed sufficient statistics
//!
//! ```text
//! S11 = Σ E[x_t x_tᵀ],  S10 = Σ E[x_t x_{t-1}ᵀ],  S00 = Σ E[x_{t-1} x_{t-1}ᵀ]   (t = 1..T)
//! A ← S10 S00⁻¹
//! Q ← (S11 - A S10ᵀ - S10 Aᵀ + A S00 Aᵀ) / T
//! ```

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lgssm::{kalman_filter, rts_smoother, KnownParams, ObservationSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmOptions {
    pub n_iters: usize,
    pub estimate_a: bool,
    pub estimate_q: bool,
}

impl Default for EmOptions {
    fn default() -> Self {
        Self {
            n_iters: 50,
            estimate_a: true,
            estimate_q: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmResult {
    pub a_hat: DMatrix<f64>,
    pub q_hat: DMatrix<f64>,
    /// Log-likelihood at the parameters entering each iteration.
    pub loglik_trace: Vec<f64>,
}

/// Runs `options.n_iters` EM iterations. `known.q` is ignored in favour of
/// `q_init`.
pub fn em_estimate(
    y: &ObservationSeries,
    known: &KnownParams,
    a_init: &DMatrix<f64>,
    q_init: &DMatrix<f64>,
    options: EmOptions,
) -> Result<EmResult> {
    if options.n_iters == 0 {
        return Err(Error::InvalidArgument("EM needs at least one iteration".into()));
    }
    if !options.estimate_a && !options.estimate_q {
        return Err(Error::InvalidArgument("EM must estimate A, Q or both".into()));
    }
    let dx = known.state_dim();
    let t_len = y.len() as f64;
    let mut params = known.with_a(a_init.clone());
    params.q = q_init.clone();
    params.validate()?;
    let mut trace = Vec::with_capacity(options.n_iters);

    for _ in 0..options.n_iters {
        let filter = kalman_filter(&params, y)?;
        trace.push(filter.log_likelihood);
        let smooth = rts_smoother(&params, &filter)?;

        let mut s11 = DMatrix::zeros(dx, dx);
        let mut s10 = DMatrix::zeros(dx, dx);
        let mut s00 = DMatrix::zeros(dx, dx);
        for t in 1..=y.len() {
            let m_t = smooth.smoothed_means.row(t).transpose();
            let m_prev = smooth.smoothed_means.row(t - 1).transpose();
            s11 += &smooth.smoothed_covs[t] + &m_t * m_t.transpose();
            s10 += &smooth.lag_one_covs[t - 1] + &m_t * m_prev.transpose();
            s00 += &smooth.smoothed_covs[t - 1] + &m_prev * m_prev.transpose();
        }

        if options.estimate_a {
            let chol = s00.clone().cholesky().ok_or(Error::SingularNormalMatrix)?;
            params.a = chol.solve(&s10.transpose()).transpose();
        }
        if options.estimate_q {
            let a = &params.a;
            let q = (&s11 - a * s10.transpose() - &s10 * a.transpose() + a * &s00 * a.transpose()) / t_len;
            params.q = (&q + q.transpose()) * 0.5;
        }
    }
    Ok(EmResult {
        a_hat: params.a,
        q_hat: params.q,
        loglik_trace: trace,
    })
}
