//! Sparsity models over the transition matrix and the model-jump kernel.
//!
//! A [`SparsityModel`] is the set of dense positions of `A`; every other entry
//! is fixed at exactly zero. Jumps between models move `k` positions in one
//! direction only, with `k` drawn from a truncated Poisson distribution, and
//! [`log_correction`] supplies the resulting proposal-probability ratio.

mod correction;
mod proposal;
mod tpoi;

pub use correction::log_correction;
pub use proposal::{propose_model, ModelProposal};
pub use tpoi::{tpoi_ln_pmf, tpoi_pmf, tpoi_sample};

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Direction of a model move.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum JumpKind {
    Retain,
    Sparser,
    Denser,
}

/// The dense positions of a `dx × dx` transition matrix.
///
/// Indices are 0-based `(row, col)` pairs kept in row-major order, with a
/// membership bitmap for constant-time lookup.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SparsityModel {
    dx: usize,
    dense: Vec<(usize, usize)>,
    bitmap: Vec<bool>,
}

impl SparsityModel {
    pub fn full(dx: usize) -> Self {
        Self::from_bitmap(dx, vec![true; dx * dx])
    }

    pub fn empty(dx: usize) -> Self {
        Self::from_bitmap(dx, vec![false; dx * dx])
    }

    pub fn from_indices(dx: usize, indices: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut bitmap = vec![false; dx * dx];
        for (i, j) in indices {
            if i >= dx || j >= dx {
                return Err(Error::InvalidArgument(format!(
                    "index ({i}, {j}) out of range for dx = {dx}"
                )));
            }
            bitmap[i * dx + j] = true;
        }
        Ok(Self::from_bitmap(dx, bitmap))
    }

    /// Row-major bitmap, `true` = dense.
    pub fn from_bitmap(dx: usize, bitmap: Vec<bool>) -> Self {
        assert_eq!(bitmap.len(), dx * dx, "bitmap length must be dx²");
        let dense = bitmap
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(k, _)| (k / dx, k % dx))
            .collect();
        Self { dx, dense, bitmap }
    }

    /// Parses a row-major `0/1` string of length `dx²`, `1` = dense.
    pub fn from_bitstring(dx: usize, s: &str) -> Result<Self> {
        if s.len() != dx * dx {
            return Err(Error::InvalidArgument(format!(
                "mask string has length {}, expected {}",
                s.len(),
                dx * dx
            )));
        }
        let bitmap = s
            .chars()
            .map(|c| match c {
                '1' => Ok(true),
                '0' => Ok(false),
                other => Err(Error::InvalidArgument(format!("invalid mask character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_bitmap(dx, bitmap))
    }

    /// Infers `dx` from a square-length bitstring.
    pub fn parse(s: &str) -> Result<Self> {
        let dx = (s.len() as f64).sqrt().round() as usize;
        Self::from_bitstring(dx, s)
    }

    pub fn to_bitstring(&self) -> String {
        self.bitmap.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    /// Dense pattern of a matrix: nonzero entries are dense.
    pub fn from_matrix(a: &nalgebra::DMatrix<f64>) -> Self {
        let dx = a.nrows();
        Self::from_bitmap(dx, (0..dx * dx).map(|k| a[(k / dx, k % dx)] != 0.0).collect())
    }

    pub fn dx(&self) -> usize {
        self.dx
    }

    pub fn size(&self) -> usize {
        self.dx * self.dx
    }

    /// Number of dense entries `D`.
    pub fn n_dense(&self) -> usize {
        self.dense.len()
    }

    /// Number of sparse entries `S = dx² - D`.
    pub fn n_sparse(&self) -> usize {
        self.size() - self.dense.len()
    }

    pub fn is_dense(&self, i: usize, j: usize) -> bool {
        self.bitmap[i * self.dx + j]
    }

    pub fn dense_indices(&self) -> &[(usize, usize)] {
        &self.dense
    }

    pub fn sparse_indices(&self) -> Vec<(usize, usize)> {
        self.bitmap
            .iter()
            .enumerate()
            .filter(|(_, &b)| !b)
            .map(|(k, _)| (k / self.dx, k % self.dx))
            .collect()
    }

    pub fn bitmap(&self) -> &[bool] {
        &self.bitmap
    }

    pub fn is_fully_dense(&self) -> bool {
        self.n_sparse() == 0
    }

    pub fn is_fully_sparse(&self) -> bool {
        self.n_dense() == 0
    }

    /// Copy with `indices` switched to `dense`.
    pub fn with_changed(&self, indices: &[(usize, usize)], dense: bool) -> Self {
        let mut bitmap = self.bitmap.clone();
        for &(i, j) in indices {
            bitmap[i * self.dx + j] = dense;
        }
        Self::from_bitmap(self.dx, bitmap)
    }

    /// Relabels states: entry `(i, j)` moves to `(perm[i], perm[j])`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut bitmap = vec![false; self.size()];
        for &(i, j) in &self.dense {
            bitmap[perm[i] * self.dx + perm[j]] = true;
        }
        Self::from_bitmap(self.dx, bitmap)
    }
}

impl fmt::Debug for SparsityModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SparsityModel({}x{}, {})", self.dx, self.dx, self.to_bitstring())
    }
}

impl fmt::Display for SparsityModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_bitstring())
    }
}

impl Serialize for SparsityModel {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_bitstring())
    }
}

impl<'de> Deserialize<'de> for SparsityModel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Self::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// If `m1` differs from `m2` in one direction only, returns that direction and
/// the number of differing entries: `(Denser, k)` when `m1` has exactly `k`
/// extra dense entries, `(Sparser, k)` when it has `k` fewer.
pub fn k_adjacency(m1: &SparsityModel, m2: &SparsityModel) -> Result<Option<(JumpKind, usize)>> {
    if m1.dx != m2.dx {
        return Err(Error::Dimension(format!(
            "models have dx = {} and dx = {}",
            m1.dx, m2.dx
        )));
    }
    let (mut only1, mut only2) = (0usize, 0usize);
    for (&b1, &b2) in m1.bitmap.iter().zip(&m2.bitmap) {
        match (b1, b2) {
            (true, false) => only1 += 1,
            (false, true) => only2 += 1,
            _ => {}
        }
    }
    Ok(match (only1, only2) {
        (k, 0) if k > 0 => Some((JumpKind::Denser, k)),
        (0, k) if k > 0 => Some((JumpKind::Sparser, k)),
        _ => None,
    })
}
