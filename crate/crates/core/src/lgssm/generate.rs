//! Random transition matrices and covariance matrices for synthetic systems.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::spectral_norm;
use crate::model_space::SparsityModel;

const MAX_DRAWS: usize = 100;

/// Divides `m` by its largest singular value and multiplies by `factor`.
pub fn scale_to_spectral_norm(m: &DMatrix<f64>, factor: f64) -> Result<DMatrix<f64>> {
    let norm = spectral_norm(m);
    if norm == 0.0 {
        return Err(Error::DegenerateDraw(1));
    }
    Ok(m * (factor / norm))
}

/// Draws a transition matrix with standard normal entries on the dense
/// positions of `mask`, exact zeros elsewhere, scaled to spectral norm
/// `safety_factor` (1.0 reproduces a marginally stable system).
pub fn random_stable_a<R: Rng + ?Sized>(mask: &SparsityModel, safety_factor: f64, rng: &mut R) -> Result<DMatrix<f64>> {
    if !(safety_factor > 0.0) {
        return Err(Error::InvalidArgument("safety factor must be positive".into()));
    }
    let dx = mask.dx();
    for _ in 0..MAX_DRAWS {
        let mut a = DMatrix::zeros(dx, dx);
        for &(i, j) in mask.dense_indices() {
            a[(i, j)] = rng.sample(StandardNormal);
        }
        if let Ok(scaled) = scale_to_spectral_norm(&a, safety_factor) {
            return Ok(scaled);
        }
    }
    Err(Error::DegenerateDraw(MAX_DRAWS))
}

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the
/// column signs fixed by the diagonal of `R`.
fn haar_orthogonal<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DMatrix<f64> {
    let z = DMatrix::<f64>::from_fn(d, d, |_, _| rng.sample(StandardNormal));
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Random covariance `Gᵀ diag(e) G` with `e_i ~ U(eig_low, eig_high)` sorted
/// descending and `G` Haar-orthogonal.
pub fn random_covariance<R: Rng + ?Sized>(d: usize, eig_low: f64, eig_high: f64, rng: &mut R) -> Result<DMatrix<f64>> {
    if d == 0 || !(eig_low > 0.0) || eig_high < eig_low {
        return Err(Error::InvalidArgument(format!(
            "random_covariance requires d > 0 and 0 < eig_low <= eig_high (got d={d}, [{eig_low}, {eig_high}])"
        )));
    }
    let mut eigs: Vec<f64> = (0..d).map(|_| rng.random_range(eig_low..=eig_high)).collect();
    eigs.sort_by(|a, b| b.total_cmp(a));
    let g = haar_orthogonal(d, rng);
    let sigma = g.transpose() * DMatrix::from_diagonal(&DVector::from_vec(eigs)) * &g;
    Ok((&sigma + sigma.transpose()) * 0.5)
}
