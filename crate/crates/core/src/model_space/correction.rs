//! Detailed-balance correction for model jumps.
//!
//! For a jump of length `J` the correction is the log ratio of the reverse
//! to forward proposal probabilities:
//!
//! ```text
//! sparser: ln r + ln TPoi(J; λ, 1, S+J) - ln TPoi(J; λ, 1, D) + ln(S! D! / ((S+J)! (D-J)!))
//! denser: -ln r + ln TPoi(J; λ, 1, D+J) - ln TPoi(J; λ, 1, S) + ln(S! D! / ((D+J)! (S-J)!))
//! ```
//!
//! with `r = (1-π₋₁)/π₋₁` between interior models. When either endpoint is the
//! fully sparse or fully dense model the jump direction there is forced, so
//! the corresponding direction probability is 1 instead of `π₋₁` or `1-π₋₁`:
//!
//! | jump    | to fully sparse | to fully dense | from fully sparse | from fully dense |
//! |---------|-----------------|----------------|-------------------|------------------|
//! | `r`     | `1/π₋₁`         | `1-π₋₁`        | `1/π₋₁`           | `1-π₋₁`          |
//!
//! A jump between the two extremes has both directions forced and `r = 1`.

use statrs::function::factorial::ln_factorial;

use super::tpoi::tpoi_ln_pmf;
use super::JumpKind;
use crate::error::{Error, Result};

fn lf(n: usize) -> f64 {
    ln_factorial(n as u64)
}

/// Log correction for a jump of length `j` from a model with `d_before` dense
/// and `s_before` sparse entries, `d_before + s_before = dx2`.
pub fn log_correction(
    kind: JumpKind,
    j: usize,
    d_before: usize,
    s_before: usize,
    pi_minus1: f64,
    lambda_j: f64,
    dx2: usize,
) -> Result<f64> {
    if d_before + s_before != dx2 {
        return Err(Error::InvalidArgument(format!(
            "D + S = {} does not equal dx² = {dx2}",
            d_before + s_before
        )));
    }
    if j == 0 {
        return Err(Error::InvalidArgument("jump length must be positive".into()));
    }
    let (d, s) = (d_before, s_before);
    match kind {
        JumpKind::Retain => Err(Error::InvalidArgument(
            "no correction applies to a retained model".into(),
        )),
        JumpKind::Sparser => {
            if j > d {
                return Err(Error::InvalidArgument(format!(
                    "cannot remove {j} entries from {d} dense"
                )));
            }
            let forward = if d == dx2 { 1.0 } else { pi_minus1 };
            let reverse = if d == j { 1.0 } else { 1.0 - pi_minus1 };
            Ok(
                reverse.ln() - forward.ln() + tpoi_ln_pmf(j, lambda_j, 1, s + j)? - tpoi_ln_pmf(j, lambda_j, 1, d)?
                    + lf(s)
                    + lf(d)
                    - lf(s + j)
                    - lf(d - j),
            )
        }
        JumpKind::Denser => {
            if j > s {
                return Err(Error::InvalidArgument(format!("cannot add {j} entries to {s} sparse")));
            }
            let forward = if d == 0 { 1.0 } else { 1.0 - pi_minus1 };
            let reverse = if d + j == dx2 { 1.0 } else { pi_minus1 };
            Ok(
                reverse.ln() - forward.ln() + tpoi_ln_pmf(j, lambda_j, 1, d + j)? - tpoi_ln_pmf(j, lambda_j, 1, s)?
                    + lf(s)
                    + lf(d)
                    - lf(d + j)
                    - lf(s - j),
            )
        }
    }
}
