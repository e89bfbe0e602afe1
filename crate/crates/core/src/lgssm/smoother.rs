//! Rauch–Tung–Striebel smoother with lag-one cross-covariances.

use nalgebra::{DMatrix, DVector};

use super::kalman::{prior_moments, FilterResult};
use super::ModelParams;
use crate::error::{Error, Result};

/// Smoothed moments for `t = 0..T`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmootherResult {
    /// `(T+1) × dx`, row `t` holds `E[x_t | y_{1:T}]`.
    pub smoothed_means: DMatrix<f64>,
    pub smoothed_covs: Vec<DMatrix<f64>>,
    /// Entry `t-1` holds `Cov(x_t, x_{t-1} | y_{1:T})` for `t = 1..T`.
    pub lag_one_covs: Vec<DMatrix<f64>>,
}

pub fn rts_smoother(params: &ModelParams, filter: &FilterResult) -> Result<SmootherResult> {
    let dx = params.state_dim();
    let t_len = filter.filtered_covs.len();
    if filter.filtered_means.ncols() != dx || filter.predicted_covs.len() != t_len {
        return Err(Error::Dimension(
            "filter result does not match the model parameters".into(),
        ));
    }
    let (m0, p0) = prior_moments(params);
    let filtered_mean = |t: usize| -> DVector<f64> {
        if t == 0 {
            m0.clone()
        } else {
            filter.filtered_means.row(t - 1).transpose()
        }
    };
    let filtered_cov = |t: usize| -> &DMatrix<f64> {
        if t == 0 {
            &p0
        } else {
            &filter.filtered_covs[t - 1]
        }
    };

    let mut means = DMatrix::zeros(t_len + 1, dx);
    let mut covs = vec![DMatrix::zeros(dx, dx); t_len + 1];
    let mut lag = vec![DMatrix::zeros(dx, dx); t_len];

    let mut ms = filtered_mean(t_len);
    let mut ps = filtered_cov(t_len).clone();
    means.row_mut(t_len).copy_from(&ms.transpose());
    covs[t_len] = ps.clone();

    for t in (0..t_len).rev() {
        let pf = filtered_cov(t);
        let mf = filtered_mean(t);
        let p_pred = &filter.predicted_covs[t];
        let m_pred = filter.predicted_means.row(t).transpose();
        let chol = p_pred
            .clone()
            .cholesky()
            .ok_or(Error::SingularPredicted { step: t + 1 })?;
        // G = Pf Aᵀ P_pred⁻¹, i.e. Gᵀ = P_pred⁻¹ A Pf.
        let gain = chol.solve(&(&params.a * pf)).transpose();
        let m_new = &mf + &gain * (&ms - m_pred);
        let p_new = pf + &gain * (&ps - p_pred) * gain.transpose();
        lag[t] = &ps * gain.transpose();
        ms = m_new;
        ps = (&p_new + p_new.transpose()) * 0.5;
        means.row_mut(t).copy_from(&ms.transpose());
        covs[t] = ps.clone();
    }
    Ok(SmootherResult {
        smoothed_means: means,
        smoothed_covs: covs,
        lag_one_covs: lag,
    })
}
