//! JSON-lines chain files: one record per iteration.
//!
//! ```text
//! {"iter":1,"loglik":-151.2,"mask":"110111011","A":[0.41,0.0,...]}
//! ```
//!
//! `A` is row-major. In compact mode `A` is omitted whenever it equals the
//! previous record's matrix bit for bit.

use std::io::{BufRead, Write};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{Chain, ChainState};
use crate::error::{Error, Result};
use crate::model_space::SparsityModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainRecord {
    pub iter: usize,
    pub loglik: f64,
    pub mask: SparsityModel,
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<f64>>,
}

fn row_major(a: &DMatrix<f64>) -> Vec<f64> {
    a.transpose().as_slice().to_vec()
}

fn same_bits(a: &DMatrix<f64>, b: &DMatrix<f64>) -> bool {
    a.shape() == b.shape() && a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits())
}

pub fn write_chain_jsonl<W: Write>(chain: &Chain, mut out: W, compact: bool) -> Result<()> {
    let mut prev: Option<&DMatrix<f64>> = None;
    for (n, state) in chain.states.iter().enumerate() {
        let include = !compact || prev.is_none_or(|p| !same_bits(p, &state.a));
        let record = ChainRecord {
            iter: n + 1,
            loglik: state.log_lik,
            mask: state.model.clone(),
            a: include.then(|| row_major(&state.a)),
        };
        serde_json::to_writer(&mut out, &record)?;
        out.write_all(b"\n")?;
        prev = Some(&state.a);
    }
    out.flush()?;
    Ok(())
}

/// Reads a chain file written by [`write_chain_jsonl`] (either mode).
/// Acceptance counters are not stored in the file and read back as zero.
pub fn read_chain_jsonl<R: BufRead>(input: R) -> Result<Chain> {
    let mut states: Vec<ChainState> = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: ChainRecord = serde_json::from_str(&line)?;
        let dx = record.mask.dx();
        let a = match (record.a, states.last()) {
            (Some(values), _) => {
                if values.len() != dx * dx {
                    return Err(Error::Dimension(format!(
                        "line {}: A has {} entries, mask implies {}",
                        lineno + 1,
                        values.len(),
                        dx * dx
                    )));
                }
                DMatrix::from_row_slice(dx, dx, &values)
            }
            (None, Some(prev)) => prev.a.clone(),
            (None, None) => {
                return Err(Error::InvalidArgument(format!(
                    "line {}: first record has no matrix",
                    lineno + 1
                )))
            }
        };
        states.push(ChainState {
            a,
            model: record.mask,
            log_lik: record.loglik,
        });
    }
    Ok(Chain {
        states,
        ..Chain::default()
    })
}
