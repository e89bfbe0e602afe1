//! Model proposal kernel: retain, or jump `k` entries sparser or denser.

use rand::Rng;

use super::tpoi::tpoi_sample;
use super::{JumpKind, SparsityModel};

#[derive(Debug, Clone, PartialEq)]
pub struct ModelProposal {
    pub proposed: SparsityModel,
    pub kind: JumpKind,
    /// Positions switched by the jump, in draw order.
    pub changed_indices: Vec<(usize, usize)>,
    /// The direction was fixed because the previous model was fully sparse or
    /// fully dense.
    pub forced: bool,
}

impl ModelProposal {
    pub fn retain(prev: &SparsityModel) -> Self {
        Self {
            proposed: prev.clone(),
            kind: JumpKind::Retain,
            changed_indices: Vec::new(),
            forced: false,
        }
    }

    pub fn jump_len(&self) -> usize {
        self.changed_indices.len()
    }
}

/// Draws a model proposal.
///
/// Random numbers are consumed in a fixed order: retain uniform, direction
/// uniform (interior models only), jump length, then index selection by a
/// partial Fisher–Yates shuffle of the eligible positions.
pub fn propose_model<R: Rng + ?Sized>(
    prev: &SparsityModel,
    pi0: f64,
    pi_minus1: f64,
    lambda_j: f64,
    rng: &mut R,
) -> ModelProposal {
    let u: f64 = rng.random();
    if u < pi0 {
        return ModelProposal::retain(prev);
    }
    let (kind, forced) = if prev.is_fully_sparse() {
        (JumpKind::Denser, true)
    } else if prev.is_fully_dense() {
        (JumpKind::Sparser, true)
    } else if rng.random::<f64>() < pi_minus1 {
        (JumpKind::Sparser, false)
    } else {
        (JumpKind::Denser, false)
    };
    let mut eligible = match kind {
        JumpKind::Sparser => prev.dense_indices().to_vec(),
        _ => prev.sparse_indices(),
    };
    let k = tpoi_sample(lambda_j, 1, eligible.len(), rng).expect("eligible set is non-empty for the chosen direction");
    for i in 0..k {
        let pick = rng.random_range(i..eligible.len());
        eligible.swap(i, pick);
    }
    eligible.truncate(k);
    let proposed = prev.with_changed(&eligible, kind == JumpKind::Denser);
    ModelProposal {
        proposed,
        kind,
        changed_indices: eligible,
        forced,
    }
}
