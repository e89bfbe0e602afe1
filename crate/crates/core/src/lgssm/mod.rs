//! Linear-Gaussian state-space models.
//!
//! ```text
//! x_0 ~ N(x̄_0, P_0)
//! x_t = A x_{t-1} + q_t,   q_t ~ N(0, Q)
//! y_t = H x_t + r_t,       r_t ~ N(0, R)
//! ```
//!
//! Parameters are fixed over time. This module holds the model types, a
//! simulator, the Kalman filter / RTS smoother and random system generators.

mod generate;
mod kalman;
mod smoother;

pub use generate::{random_covariance, random_stable_a, scale_to_spectral_norm};
pub use kalman::{kalman_filter, log_likelihood, FilterResult, LikelihoodEvaluator};
pub use smoother::{rts_smoother, SmootherResult};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{check_covariance, psd_factor};

/// Every parameter of the model except the transition matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnownParams {
    pub h: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub x0_mean: DVector<f64>,
    pub p0: DMatrix<f64>,
}

impl KnownParams {
    pub fn state_dim(&self) -> usize {
        self.h.ncols()
    }

    pub fn obs_dim(&self) -> usize {
        self.h.nrows()
    }

    pub fn with_a(&self, a: DMatrix<f64>) -> ModelParams {
        ModelParams {
            a,
            h: self.h.clone(),
            q: self.q.clone(),
            r: self.r.clone(),
            x0_mean: self.x0_mean.clone(),
            p0: self.p0.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (dx, dy) = (self.state_dim(), self.obs_dim());
        if dx == 0 || dy == 0 {
            return Err(Error::Dimension(
                "state and observation dimensions must be positive".into(),
            ));
        }
        let square = |m: &DMatrix<f64>, d: usize, name: &str| {
            if m.nrows() != d || m.ncols() != d {
                Err(Error::Dimension(format!(
                    "{name} is {}x{}, expected {d}x{d}",
                    m.nrows(),
                    m.ncols()
                )))
            } else {
                Ok(())
            }
        };
        square(&self.q, dx, "Q")?;
        square(&self.p0, dx, "P0")?;
        square(&self.r, dy, "R")?;
        if self.x0_mean.len() != dx {
            return Err(Error::Dimension(format!(
                "x0_mean has length {}, expected {dx}",
                self.x0_mean.len()
            )));
        }
        check_covariance(&self.q, "Q")?;
        check_covariance(&self.r, "R")?;
        check_covariance(&self.p0, "P0")?;
        Ok(())
    }
}

/// A complete parameter set `(A, H, Q, R, x̄_0, P_0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub a: DMatrix<f64>,
    pub h: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub x0_mean: DVector<f64>,
    pub p0: DMatrix<f64>,
}

impl ModelParams {
    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn obs_dim(&self) -> usize {
        self.h.nrows()
    }

    pub fn known(&self) -> KnownParams {
        KnownParams {
            h: self.h.clone(),
            q: self.q.clone(),
            r: self.r.clone(),
            x0_mean: self.x0_mean.clone(),
            p0: self.p0.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dx = self.state_dim();
        if self.a.ncols() != dx {
            return Err(Error::Dimension(format!(
                "A is {}x{}, expected square",
                self.a.nrows(),
                self.a.ncols()
            )));
        }
        if self.h.ncols() != dx {
            return Err(Error::Dimension(format!(
                "H has {} columns, expected {dx}",
                self.h.ncols()
            )));
        }
        self.known().validate()
    }
}

/// Observations `y_1..y_T`, one row per time step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationSeries {
    y: DMatrix<f64>,
}

impl ObservationSeries {
    pub fn new(y: DMatrix<f64>) -> Result<Self> {
        if y.nrows() == 0 || y.ncols() == 0 {
            return Err(Error::InvalidArgument("observation series must be non-empty".into()));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "observation series has non-finite entries".into(),
            ));
        }
        Ok(Self { y })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let t = rows.len();
        let dy = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dy) {
            return Err(Error::Dimension("ragged observation rows".into()));
        }
        Self::new(DMatrix::from_fn(t, dy, |i, j| rows[i][j]))
    }

    pub fn len(&self) -> usize {
        self.y.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.y.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.y.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.y
    }

    /// Observation at time `t` (0-based row index, i.e. `y_{t+1}`).
    pub fn at(&self, t: usize) -> DVector<f64> {
        self.y.row(t).transpose()
    }

    /// First `t` observations.
    pub fn truncated(&self, t: usize) -> Result<Self> {
        Self::new(self.y.rows(0, t.min(self.len())).into_owned())
    }
}

/// Hidden states `x_0..x_T`, one row per time step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSeries {
    pub x: DMatrix<f64>,
}

/// Draws a state and observation trajectory of length `t_len`.
///
/// Noise is drawn step by step (state noise, then observation noise), so a
/// longer simulation with the same seed extends a shorter one.
pub fn simulate<R: Rng + ?Sized>(
    params: &ModelParams,
    t_len: usize,
    rng: &mut R,
) -> Result<(StateSeries, ObservationSeries)> {
    params.validate()?;
    if t_len == 0 {
        return Err(Error::InvalidArgument("series length must be positive".into()));
    }
    let (dx, dy) = (params.state_dim(), params.obs_dim());
    let lp = psd_factor(&params.p0, "P0")?;
    let lq = psd_factor(&params.q, "Q")?;
    let lr = psd_factor(&params.r, "R")?;

    let mut normal = |d: usize| DVector::<f64>::from_fn(d, |_, _| rng.sample(StandardNormal));

    let mut xs = DMatrix::zeros(t_len + 1, dx);
    let mut ys = DMatrix::zeros(t_len, dy);
    let mut x = &params.x0_mean + &lp * normal(dx);
    xs.row_mut(0).copy_from(&x.transpose());
    for t in 0..t_len {
        x = &params.a * &x + &lq * normal(dx);
        let y = &params.h * &x + &lr * normal(dy);
        xs.row_mut(t + 1).copy_from(&x.transpose());
        ys.row_mut(t).copy_from(&y.transpose());
    }
    Ok((StateSeries { x: xs }, ObservationSeries::new(ys)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    fn scalar(a: f64, h: f64, q: f64, r: f64, x0: f64, p0: f64) -> ModelParams {
        let s = |v| DMatrix::from_element(1, 1, v);
        ModelParams {
            a: s(a),
            h: s(h),
            q: s(q),
            r: s(r),
            x0_mean: DVector::from_element(1, x0),
            p0: s(p0),
        }
    }

    #[test]
    fn noiseless_identity_dynamics_are_constant() {
        let p = scalar(1.0, 1.0, 0.0, 0.0, 2.5, 0.0);
        let (_, y) = simulate(&p, 20, &mut rng_from_seed(1)).unwrap();
        assert!(y.matrix().iter().all(|&v| v == 2.5));
    }

    #[test]
    fn white_noise_variance_converges() {
        // A = 0, Q = 1, R = 0: y_t i.i.d. N(0, 1).
        let p = scalar(0.0, 1.0, 1.0, 0.0, 0.0, 0.0);
        let n = 10_000;
        let (_, y) = simulate(&p, n, &mut rng_from_seed(3)).unwrap();
        let v: Vec<f64> = y.matrix().iter().copied().collect();
        let mean = v.iter().sum::<f64>() / n as f64;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        // Standard error of the sample variance of N(0,1) data is sqrt(2/(n-1)).
        let se = (2.0 / (n as f64 - 1.0)).sqrt();
        assert!((var - 1.0).abs() < 3.0 * se, "var = {var}");
    }

    #[test]
    fn simulation_is_deterministic_and_prefix_stable() {
        let mut p = scalar(0.7, 1.0, 0.5, 0.3, 1.0, 0.1);
        p.a[(0, 0)] = 0.7;
        let (x1, y1) = simulate(&p, 50, &mut rng_from_seed(9)).unwrap();
        let (x2, y2) = simulate(&p, 50, &mut rng_from_seed(9)).unwrap();
        assert_eq!(x1, x2);
        assert_eq!(y1, y2);
        let (_, y3) = simulate(&p, 80, &mut rng_from_seed(9)).unwrap();
        assert_eq!(y3.truncated(50).unwrap(), y1);
    }

    #[test]
    fn rejects_bad_inputs() {
        let mut p = scalar(0.5, 1.0, -1.0, 1.0, 0.0, 1.0);
        assert!(matches!(
            simulate(&p, 5, &mut rng_from_seed(0)),
            Err(Error::NotPsd { name: "Q" })
        ));
        p.q = DMatrix::from_element(2, 2, 1.0);
        assert!(matches!(
            simulate(&p, 5, &mut rng_from_seed(0)),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn observation_series_rejects_non_finite() {
        assert!(ObservationSeries::from_rows(&[vec![1.0], vec![f64::NAN]]).is_err());
        assert!(ObservationSeries::from_rows(&[]).is_err());
    }
}
