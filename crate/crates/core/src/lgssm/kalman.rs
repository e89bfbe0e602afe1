//! Kalman filter and prediction-error decomposition of the log-likelihood.
//!
//! The sampler evaluates the filter once per iteration, so the recursion runs
//! on preallocated column-major buffers instead of allocating nalgebra
//! temporaries.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::{KnownParams, ModelParams, ObservationSeries};
use crate::error::{Error, Result};

/// Filtering and one-step prediction moments for `t = 1..T`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterResult {
    /// `T × dx`, row `t-1` holds `E[x_t | y_{1:t}]`.
    pub filtered_means: DMatrix<f64>,
    pub filtered_covs: Vec<DMatrix<f64>>,
    /// `T × dx`, row `t-1` holds `E[x_t | y_{1:t-1}]`.
    pub predicted_means: DMatrix<f64>,
    pub predicted_covs: Vec<DMatrix<f64>>,
    pub log_likelihood: f64,
}

/// `out (m×n) = a (m×k) · b (k×n)`, column-major.
#[inline]
fn mul(out: &mut [f64], a: &[f64], b: &[f64], m: usize, k: usize, n: usize) {
    for j in 0..n {
        let col = &mut out[j * m..(j + 1) * m];
        col.fill(0.0);
        for p in 0..k {
            let bpj = b[p + j * k];
            if bpj == 0.0 {
                continue;
            }
            let acol = &a[p * m..(p + 1) * m];
            for i in 0..m {
                col[i] += acol[i] * bpj;
            }
        }
    }
}

/// `out (m×n) = a (m×k) · bᵀ` where `b` is `n×k`, column-major.
#[inline]
fn mul_bt(out: &mut [f64], a: &[f64], b: &[f64], m: usize, k: usize, n: usize) {
    for j in 0..n {
        let col = &mut out[j * m..(j + 1) * m];
        col.fill(0.0);
        for p in 0..k {
            let bjp = b[j + p * n];
            if bjp == 0.0 {
                continue;
            }
            let acol = &a[p * m..(p + 1) * m];
            for i in 0..m {
                col[i] += acol[i] * bjp;
            }
        }
    }
}

fn symmetrize_in_place(m: &mut [f64], n: usize) {
    for j in 0..n {
        for i in (j + 1)..n {
            let v = 0.5 * (m[i + j * n] + m[j + i * n]);
            m[i + j * n] = v;
            m[j + i * n] = v;
        }
    }
}

/// In-place lower Cholesky factor of an `n×n` matrix. Returns `false` when the
/// matrix is not numerically positive definite.
fn cholesky_in_place(s: &mut [f64], n: usize) -> bool {
    for j in 0..n {
        let mut d = s[j + j * n];
        for p in 0..j {
            d -= s[j + p * n] * s[j + p * n];
        }
        if !(d > 0.0) || !d.is_finite() {
            return false;
        }
        let d = d.sqrt();
        s[j + j * n] = d;
        for i in (j + 1)..n {
            let mut v = s[i + j * n];
            for p in 0..j {
                v -= s[i + p * n] * s[j + p * n];
            }
            s[i + j * n] = v / d;
        }
    }
    true
}

/// Solves `L Lᵀ x = b` in place given the lower factor `L`.
fn cholesky_solve(l: &[f64], x: &mut [f64], n: usize) {
    for i in 0..n {
        let mut v = x[i];
        for p in 0..i {
            v -= l[i + p * n] * x[p];
        }
        x[i] = v / l[i + i * n];
    }
    for i in (0..n).rev() {
        let mut v = x[i];
        for p in (i + 1)..n {
            v -= l[p + i * n] * x[p];
        }
        x[i] = v / l[i + i * n];
    }
}

/// Reusable filter state for repeated likelihood evaluations with a fixed
/// observation series and fixed `(H, Q, R, x̄_0, P_0)`.
#[derive(Debug, Clone)]
pub struct LikelihoodEvaluator {
    dx: usize,
    dy: usize,
    t_len: usize,
    h: Vec<f64>,
    q: Vec<f64>,
    r: Vec<f64>,
    x0: Vec<f64>,
    p0: Vec<f64>,
    /// `dy × T`; column `t` is `y_{t+1}`.
    y: Vec<f64>,
    evaluations: u64,
    /// `H = I`: skips the two products with `H`.
    identity_h: bool,
    // scratch
    m: Vec<f64>,
    p: Vec<f64>,
    m_pred: Vec<f64>,
    p_pred: Vec<f64>,
    tmp: Vec<f64>,
    pht: Vec<f64>,
    s: Vec<f64>,
    v: Vec<f64>,
    w: Vec<f64>,
    k: Vec<f64>,
    krow: Vec<f64>,
}

impl LikelihoodEvaluator {
    pub fn new(known: &KnownParams, y: &ObservationSeries) -> Result<Self> {
        known.validate()?;
        let (dx, dy, t_len) = (known.state_dim(), known.obs_dim(), y.len());
        if y.dim() != dy {
            return Err(Error::Dimension(format!(
                "observations have dimension {}, H has {dy} rows",
                y.dim()
            )));
        }
        let ym = y.matrix().transpose();
        Ok(Self {
            dx,
            dy,
            t_len,
            h: known.h.as_slice().to_vec(),
            q: known.q.as_slice().to_vec(),
            r: known.r.as_slice().to_vec(),
            x0: known.x0_mean.as_slice().to_vec(),
            p0: known.p0.as_slice().to_vec(),
            y: ym.as_slice().to_vec(),
            evaluations: 0,
            identity_h: dx == dy && known.h == DMatrix::identity(dx, dx),
            m: vec![0.0; dx],
            p: vec![0.0; dx * dx],
            m_pred: vec![0.0; dx],
            p_pred: vec![0.0; dx * dx],
            tmp: vec![0.0; dx * dx],
            pht: vec![0.0; dx * dy],
            s: vec![0.0; dy * dy],
            v: vec![0.0; dy],
            w: vec![0.0; dy],
            k: vec![0.0; dx * dy],
            krow: vec![0.0; dy],
        })
    }

    pub fn state_dim(&self) -> usize {
        self.dx
    }

    pub fn series_len(&self) -> usize {
        self.t_len
    }

    /// Number of filter runs performed so far.
    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    /// `log p(y_{1:T} | A)`.
    pub fn log_likelihood(&mut self, a: &DMatrix<f64>) -> Result<f64> {
        self.run(a, None)
    }

    /// Full filter pass returning all moments.
    pub fn filter(&mut self, a: &DMatrix<f64>) -> Result<FilterResult> {
        let (dx, t) = (self.dx, self.t_len);
        let mut out = FilterResult {
            filtered_means: DMatrix::zeros(t, dx),
            filtered_covs: Vec::with_capacity(t),
            predicted_means: DMatrix::zeros(t, dx),
            predicted_covs: Vec::with_capacity(t),
            log_likelihood: 0.0,
        };
        out.log_likelihood = self.run(a, Some(&mut out))?;
        Ok(out)
    }

    fn run(&mut self, a: &DMatrix<f64>, mut sink: Option<&mut FilterResult>) -> Result<f64> {
        let (dx, dy) = (self.dx, self.dy);
        if a.nrows() != dx || a.ncols() != dx {
            return Err(Error::Dimension(format!(
                "A is {}x{}, expected {dx}x{dx}",
                a.nrows(),
                a.ncols()
            )));
        }
        self.evaluations += 1;
        let a = a.as_slice();
        let log_2pi = (2.0 * PI).ln();
        self.m.copy_from_slice(&self.x0);
        self.p.copy_from_slice(&self.p0);
        let mut ll = 0.0;

        for t in 0..self.t_len {
            // Predict.
            mul(&mut self.m_pred, a, &self.m, dx, dx, 1);
            mul(&mut self.tmp, a, &self.p, dx, dx, dx);
            mul_bt(&mut self.p_pred, &self.tmp, a, dx, dx, dx);
            for (pp, q) in self.p_pred.iter_mut().zip(&self.q) {
                *pp += q;
            }
            symmetrize_in_place(&mut self.p_pred, dx);

            // Innovation.
            let yt = &self.y[t * dy..(t + 1) * dy];
            if self.identity_h {
                self.pht.copy_from_slice(&self.p_pred);
                self.s.copy_from_slice(&self.p_pred);
                for ((v, y), m) in self.v.iter_mut().zip(yt).zip(&self.m_pred) {
                    *v = y - m;
                }
            } else {
                mul_bt(&mut self.pht, &self.p_pred, &self.h, dx, dx, dy);
                mul(&mut self.s, &self.h, &self.pht, dy, dx, dy);
                mul(&mut self.v, &self.h, &self.m_pred, dy, dx, 1);
                for (v, y) in self.v.iter_mut().zip(yt) {
                    *v = y - *v;
                }
            }
            for (s, r) in self.s.iter_mut().zip(&self.r) {
                *s += r;
            }
            symmetrize_in_place(&mut self.s, dy);
            if !cholesky_in_place(&mut self.s, dy) {
                return Err(Error::SingularInnovation { step: t + 1 });
            }
            let log_det: f64 = (0..dy).map(|i| self.s[i + i * dy].ln()).sum::<f64>() * 2.0;
            self.w.copy_from_slice(&self.v);
            cholesky_solve(&self.s, &mut self.w, dy);
            let quad: f64 = self.v.iter().zip(&self.w).map(|(a, b)| a * b).sum();
            ll -= 0.5 * (dy as f64 * log_2pi + log_det + quad);

            // Gain: row i of K solves S k = (P_pred Hᵀ) row i.
            for i in 0..dx {
                for j in 0..dy {
                    self.krow[j] = self.pht[i + j * dx];
                }
                cholesky_solve(&self.s, &mut self.krow, dy);
                for j in 0..dy {
                    self.k[i + j * dx] = self.krow[j];
                }
            }

            // Update mean.
            for i in 0..dx {
                let mut acc = self.m_pred[i];
                for j in 0..dy {
                    acc += self.k[i + j * dx] * self.v[j];
                }
                self.m[i] = acc;
            }

            // P = P_pred - K (P_pred Hᵀ)ᵀ, symmetrized.
            self.p.copy_from_slice(&self.p_pred);
            for j in 0..dx {
                for p in 0..dy {
                    let b = self.pht[j + p * dx];
                    if b == 0.0 {
                        continue;
                    }
                    for i in 0..dx {
                        self.p[i + j * dx] -= self.k[i + p * dx] * b;
                    }
                }
            }
            symmetrize_in_place(&mut self.p, dx);

            if let Some(out) = sink.as_deref_mut() {
                for i in 0..dx {
                    out.predicted_means[(t, i)] = self.m_pred[i];
                    out.filtered_means[(t, i)] = self.m[i];
                }
                out.predicted_covs
                    .push(DMatrix::from_column_slice(dx, dx, &self.p_pred));
                out.filtered_covs.push(DMatrix::from_column_slice(dx, dx, &self.p));
            }
        }
        if !ll.is_finite() {
            return Err(Error::SingularInnovation { step: self.t_len });
        }
        Ok(ll)
    }
}

/// Runs the Kalman filter for a full parameter set.
pub fn kalman_filter(params: &ModelParams, y: &ObservationSeries) -> Result<FilterResult> {
    params.validate()?;
    LikelihoodEvaluator::new(&params.known(), y)?.filter(&params.a)
}

/// `log p(y_{1:T} | θ)` by the prediction-error decomposition.
pub fn log_likelihood(params: &ModelParams, y: &ObservationSeries) -> Result<f64> {
    params.validate()?;
    LikelihoodEvaluator::new(&params.known(), y)?.log_likelihood(&params.a)
}

/// Prior moments at `t = 0` as a filtered pair, for code that indexes `0..=T`.
pub(crate) fn prior_moments(params: &ModelParams) -> (DVector<f64>, DMatrix<f64>) {
    (params.x0_mean.clone(), params.p0.clone())
}
