//! Truncated Poisson distribution `TPoi(λ, a, b)` on the integers `a..=b`.

use rand::Rng;
use statrs::function::factorial::ln_factorial;

use crate::error::{Error, Result};

fn check_support(a: usize, b: usize) -> Result<()> {
    if a > b {
        return Err(Error::InvalidArgument(format!(
            "truncated Poisson support is empty (a = {a} > b = {b})"
        )));
    }
    Ok(())
}

/// Unnormalized log weight `n ln λ - ln n!`; the `e^{-λ}` factor cancels.
fn ln_weight(n: usize, lambda: f64) -> f64 {
    n as f64 * lambda.ln() - ln_factorial(n as u64)
}

/// Log normalizer over `a..=b`, computed with log-sum-exp.
fn ln_normalizer(lambda: f64, a: usize, b: usize) -> f64 {
    let max = (a..=b).map(|n| ln_weight(n, lambda)).fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = (a..=b).map(|n| (ln_weight(n, lambda) - max).exp()).sum();
    max + sum.ln()
}

/// `ln TPoi(n; λ, a, b)`. `λ = 0` is the point mass at `a`.
pub fn tpoi_ln_pmf(n: usize, lambda: f64, a: usize, b: usize) -> Result<f64> {
    check_support(a, b)?;
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("invalid Poisson rate {lambda}")));
    }
    if n < a || n > b {
        return Ok(f64::NEG_INFINITY);
    }
    if lambda == 0.0 {
        return Ok(if n == a { 0.0 } else { f64::NEG_INFINITY });
    }
    Ok(ln_weight(n, lambda) - ln_normalizer(lambda, a, b))
}

pub fn tpoi_pmf(n: usize, lambda: f64, a: usize, b: usize) -> Result<f64> {
    tpoi_ln_pmf(n, lambda, a, b).map(f64::exp)
}

/// Inverse-CDF draw over the finite support. Always consumes one uniform.
pub fn tpoi_sample<R: Rng + ?Sized>(lambda: f64, a: usize, b: usize, rng: &mut R) -> Result<usize> {
    check_support(a, b)?;
    let u: f64 = rng.random();
    if lambda == 0.0 || a == b {
        tpoi_ln_pmf(a, lambda, a, b)?;
        return Ok(a);
    }
    let ln_z = ln_normalizer(lambda, a, b);
    let mut cdf = 0.0;
    for n in a..=b {
        cdf += (ln_weight(n, lambda) - ln_z).exp();
        if u < cdf {
            return Ok(n);
        }
    }
    Ok(b)
}
