//! Small dense linear-algebra helpers shared across modules.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub const SYMMETRY_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-10;

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn is_symmetric(m: &DMatrix<f64>, tol: f64) -> bool {
    m.is_square() && max_abs_diff(m, &m.transpose()) <= tol
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Smallest eigenvalue of a symmetric matrix (symmetrized before solving).
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    symmetrize(m)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

pub fn check_covariance(m: &DMatrix<f64>, name: &'static str) -> Result<()> {
    if !is_symmetric(m, SYMMETRY_TOL) || min_eigenvalue(m) < -PSD_TOL {
        return Err(Error::NotPsd { name });
    }
    Ok(())
}

/// A factor `L` with `L Lᵀ = m` for a symmetric PSD `m`, via the eigendecomposition
/// so that singular covariances (e.g. `Q = 0`) are accepted.
pub fn psd_factor(m: &DMatrix<f64>, name: &'static str) -> Result<DMatrix<f64>> {
    check_covariance(m, name)?;
    let eig = symmetrize(m).symmetric_eigen();
    let mut factor = eig.eigenvectors;
    for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
        let s = lambda.max(0.0).sqrt();
        factor.column_mut(j).scale_mut(s);
    }
    Ok(factor)
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().iter().copied().fold(0.0, f64::max)
}

/// Entrywise L1 norm.
pub fn l1_norm(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|x| x.abs()).sum()
}
