//! as-MPS / as-MPO containers and their arithmetic.
//!
//! An [`AsMps`] site has legs `(sigma: Out, a_l: In, a_{l+1}: Out)` and an
//! [`AsMpo`] site has legs `(sigma: In, tau: Out, b_l: In, b_{l+1}: Out)`.
//! Charge flows in from the right: the last bond carries only charge 0 and
//! the first bond carries the set of total charges present. Every sector of
//! the first bond has dimension 1, so closing the chain at the left is a plain
//! sum over equal charges.

mod checkpoint;
mod chain;
mod mpo;
mod mps;
mod sectors;

pub use checkpoint::{Checkpoint, CheckpointKind};
pub use mpo::{operator_site, AsMpo};
pub use mps::{expectation, matrix_element, overlap, AsMps};
pub(crate) use mps::{grow_left, grow_right, left_boundary, right_boundary};
pub use sectors::{SectorDecomposition, SectorEntry};

use std::collections::BTreeMap;

use ndarray::{ArrayD, IxDyn, Slice};

use crate::error::{Error, Result};
use crate::symtensor::SymTensor;
use crate::C64;

/// Direct sum of two tensors along the legs in `axes`; all other legs must agree.
pub(crate) fn direct_sum(a: &SymTensor, b: &SymTensor, axes: &[usize]) -> Result<SymTensor> {
    if a.rank() != b.rank() {
        return Err(Error::LegMismatch("direct sum of tensors with different ranks".into()));
    }
    let mut legs = a.legs().to_vec();
    for i in 0..a.rank() {
        if axes.contains(&i) {
            if a.leg(i).dir() != b.leg(i).dir() {
                return Err(Error::LegMismatch(format!("direct sum leg {i} directions differ")));
            }
            legs[i] = a.leg(i).direct_sum(b.leg(i));
        } else if a.leg(i) != b.leg(i) {
            return Err(Error::LegMismatch(format!("direct sum leg {i} must be identical")));
        }
    }
    let mut blocks: BTreeMap<Vec<crate::Charge>, ArrayD<C64>> = BTreeMap::new();
    let mut place = |key: &Vec<crate::Charge>, blk: &ArrayD<C64>, second: bool| {
        let shape: Vec<usize> = key.iter().zip(&legs).map(|(q, l)| l.dim_of(*q).unwrap()).collect();
        let target = blocks.entry(key.clone()).or_insert_with(|| ArrayD::zeros(IxDyn(&shape)));
        let offs: Vec<usize> = (0..key.len())
            .map(|i| if second && axes.contains(&i) { a.leg(i).dim_of(key[i]).unwrap_or(0) } else { 0 })
            .collect();
        target
            .slice_each_axis_mut(|ax| {
                let i = ax.axis.index();
                Slice::from(offs[i]..offs[i] + blk.shape()[i])
            })
            .assign(blk);
    };
    for (k, blk) in a.blocks() {
        place(k, blk, false);
    }
    for (k, blk) in b.blocks() {
        place(k, blk, true);
    }
    SymTensor::new(legs, blocks)
}
