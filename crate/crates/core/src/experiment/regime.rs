use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::em::{em_estimate, EmOptions};
use crate::error::Result;
use crate::lgssm::{
    random_covariance, random_stable_a, scale_to_spectral_norm, simulate, KnownParams, ObservationSeries,
};
use crate::model_space::SparsityModel;
use crate::rng::{derive_labeled_seed, rng_from_seed};

use super::config::{ExperimentSpec, Regime};
use super::data::load_csv_series;

/// One dataset together with what the sampler is allowed to know about it.
#[derive(Debug, Clone)]
pub struct RegimeInstance {
    /// Parameters handed to the sampler (`Q` may be an estimate).
    pub known: KnownParams,
    pub y: ObservationSeries,
    pub a_true: Option<DMatrix<f64>>,
    pub true_mask: Option<SparsityModel>,
    pub labels: Option<Vec<String>>,
}

/// One zero per row and column at a random permutation.
fn permutation_mask<R: Rng + ?Sized>(dx: usize, rng: &mut R) -> SparsityModel {
    let mut perm: Vec<usize> = (0..dx).collect();
    perm.shuffle(rng);
    let dense = (0..dx).flat_map(|i| (0..dx).map(move |j| (i, j)));
    let bitmap = dense.map(|(i, j)| perm[i] != j).collect();
    SparsityModel::from_bitmap(dx, bitmap)
}

fn block_mask(dx: usize) -> SparsityModel {
    let bitmap = (0..dx * dx).map(|k| (k / dx) / 2 == (k % dx) / 2).collect();
    SparsityModel::from_bitmap(dx, bitmap)
}

fn isotropic_mask<R: Rng + ?Sized>(dx: usize, rng: &mut R) -> SparsityModel {
    if dx == 3 {
        permutation_mask(dx, rng)
    } else {
        block_mask(dx)
    }
}

fn synthetic_known(dx: usize, q: DMatrix<f64>, r_scale: f64) -> KnownParams {
    KnownParams {
        h: DMatrix::identity(dx, dx),
        q,
        r: DMatrix::identity(dx, dx) * r_scale,
        x0_mean: DVector::from_element(dx, 1.0),
        p0: DMatrix::identity(dx, dx) * 1e-8,
    }
}

/// Nested masks: entries are zeroed in a fixed random order, so for a given
/// run every sparsity level shares the same base matrix and ordering.
fn nested_sparsity<R: Rng + ?Sized>(
    dx: usize,
    n_sparse: usize,
    safety: f64,
    rng: &mut R,
) -> Result<(SparsityModel, DMatrix<f64>)> {
    let base = DMatrix::<f64>::from_fn(dx, dx, |_, _| rng.sample(StandardNormal));
    let mut order: Vec<usize> = (0..dx * dx).collect();
    order.shuffle(rng);
    let mut bitmap = vec![true; dx * dx];
    for &k in &order[..n_sparse] {
        bitmap[k] = false;
    }
    let mask = SparsityModel::from_bitmap(dx, bitmap);
    let masked = DMatrix::from_fn(dx, dx, |i, j| if mask.is_dense(i, j) { base[(i, j)] } else { 0.0 });
    Ok((mask, scale_to_spectral_norm(&masked, safety)?))
}

/// Builds dataset `run` of length `t_len`. Randomness depends only on the
/// master seed and `run`, so different lengths share a common prefix.
pub fn build_regime(spec: &ExperimentSpec, run: usize, t_len: usize) -> Result<RegimeInstance> {
    let dx = spec.dx;
    let mut sys_rng = rng_from_seed(derive_labeled_seed(spec.seed, run as u64, "system"));
    let mut noise_rng = rng_from_seed(derive_labeled_seed(spec.seed, run as u64, "noise"));
    let iso_q = || DMatrix::identity(dx, dx) * spec.q_scale;

    let (mask, a_true, q_true) = match spec.regime {
        Regime::RealCsv => return real_csv_instance(spec, run),
        Regime::Iso3 | Regime::VarLength => {
            let mask = permutation_mask(dx, &mut sys_rng);
            let a = random_stable_a(&mask, spec.stability_factor, &mut sys_rng)?;
            (mask, a, iso_q())
        }
        Regime::Iso6Block | Regime::Iso12Block => {
            let mask = block_mask(dx);
            let a = random_stable_a(&mask, spec.stability_factor, &mut sys_rng)?;
            (mask, a, iso_q())
        }
        Regime::Aniso | Regime::AnisoEstimatedQ => {
            let mask = isotropic_mask(dx, &mut sys_rng);
            let a = random_stable_a(&mask, spec.stability_factor, &mut sys_rng)?;
            let q = random_covariance(dx, 0.5, 1.5, &mut sys_rng)? * spec.q_scale;
            (mask, a, q)
        }
        Regime::VarSparsity => {
            let (mask, a) = nested_sparsity(dx, spec.n_sparse, spec.stability_factor, &mut sys_rng)?;
            (mask, a, iso_q())
        }
        Regime::Custom => {
            let mask = spec.mask.clone().expect("validated spec has a mask");
            let a = random_stable_a(&mask, spec.stability_factor, &mut sys_rng)?;
            (mask, a, iso_q())
        }
    };

    let truth = synthetic_known(dx, q_true, spec.r_scale);
    let (_, y) = simulate(&truth.with_a(a_true.clone()), t_len, &mut noise_rng)?;
    let mut known = truth;
    if spec.regime == Regime::AnisoEstimatedQ {
        let mut em_rng = rng_from_seed(derive_labeled_seed(spec.seed, run as u64, "em-q"));
        known.q = estimate_q(&known, &y, spec.em_iters, &mut em_rng)?;
    }
    Ok(RegimeInstance {
        known,
        y,
        a_true: Some(a_true),
        true_mask: Some(mask),
        labels: None,
    })
}

fn real_csv_instance(spec: &ExperimentSpec, run: usize) -> Result<RegimeInstance> {
    let path = spec.csv_path.as_ref().expect("validated spec has a csv path");
    let y = load_csv_series(path, &spec.columns, spec.year_filter.as_ref())?;
    let dx = y.dim();
    let mut known = KnownParams {
        h: DMatrix::identity(dx, dx),
        q: DMatrix::identity(dx, dx),
        r: DMatrix::identity(dx, dx) * spec.r_scale,
        x0_mean: y.at(0),
        p0: DMatrix::identity(dx, dx),
    };
    let mut em_rng = rng_from_seed(derive_labeled_seed(spec.seed, run as u64, "em-q"));
    known.q = estimate_q(&known, &y, spec.em_iters, &mut em_rng)?;
    Ok(RegimeInstance {
        known,
        y,
        a_true: None,
        true_mask: None,
        labels: Some(spec.columns.clone()),
    })
}

fn standard_normal_matrix<R: Rng + ?Sized>(dx: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(dx, dx, |_, _| rng.sample(StandardNormal))
}

/// Joint EM for `(A, Q)`; only `Q` is kept.
fn estimate_q<R: Rng + ?Sized>(
    known: &KnownParams,
    y: &ObservationSeries,
    n_iters: usize,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    let a_init = standard_normal_matrix(known.state_dim(), rng);
    let opts = EmOptions {
        n_iters,
        estimate_a: true,
        estimate_q: true,
    };
    Ok(em_estimate(y, known, &a_init, &known.q, opts)?.q_hat)
}

/// EM point estimate of `A` with `Q` fixed, from a standard normal start.
/// Used as the sampler's starting point.
pub fn initial_transition<R: Rng + ?Sized>(
    known: &KnownParams,
    y: &ObservationSeries,
    n_iters: usize,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    let a_init = standard_normal_matrix(known.state_dim(), rng);
    let opts = EmOptions {
        n_iters,
        estimate_a: true,
        estimate_q: false,
    };
    Ok(em_estimate(y, known, &a_init, &known.q, opts)?.a_hat)
}
