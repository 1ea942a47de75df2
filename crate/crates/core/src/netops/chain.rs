//! Gauge moves on a chain of three-leg sites `(p: Out, left: In, right: Out)`.
//! Shared by MPS sites and by MPO sites whose physical legs have been fused.

use crate::error::Result;
use crate::symtensor::{SymTensor, TruncationPolicy};

/// Make site `i` left-canonical and push the remainder into site `i + 1`.
pub(crate) fn left_orth(sites: &mut [SymTensor], i: usize, policy: &TruncationPolicy) -> Result<f64> {
    let svd = sites[i].block_svd(&[0, 1], &[2], policy)?;
    let rest = svd.sv();
    let next = SymTensor::contract(&rest, &sites[i + 1], &[(1, 1)])?;
    sites[i + 1] = next.permute(&[1, 0, 2]);
    sites[i] = svd.u;
    Ok(svd.discarded_weight)
}

/// Make site `i` right-canonical and push the remainder into site `i - 1`.
pub(crate) fn right_orth(sites: &mut [SymTensor], i: usize, policy: &TruncationPolicy) -> Result<f64> {
    let svd = sites[i].block_svd(&[1], &[0, 2], policy)?;
    let rest = svd.us();
    sites[i - 1] = SymTensor::contract(&sites[i - 1], &rest, &[(2, 0)])?;
    sites[i] = svd.v.permute(&[1, 0, 2]);
    Ok(svd.discarded_weight)
}

/// Move the orthogonality center from `from` (or from nowhere) to `to` without truncation.
pub(crate) fn move_center(sites: &mut [SymTensor], from: Option<usize>, to: usize) -> Result<()> {
    let exact = TruncationPolicy::exact();
    let n = sites.len();
    match from {
        None => {
            for i in 0..to {
                left_orth(sites, i, &exact)?;
            }
            for i in (to + 1..n).rev() {
                right_orth(sites, i, &exact)?;
            }
        }
        Some(c) if c < to => {
            for i in c..to {
                left_orth(sites, i, &exact)?;
            }
        }
        Some(c) => {
            for i in (to + 1..=c).rev() {
                right_orth(sites, i, &exact)?;
            }
        }
    }
    Ok(())
}

/// Left-canonicalize everything exactly, then truncate on a right-to-left
/// sweep. The result is right-canonical with its center at site 0.
pub(crate) fn compress(sites: &mut [SymTensor], from: Option<usize>, policy: &TruncationPolicy) -> Result<f64> {
    let n = sites.len();
    move_center(sites, from, n - 1)?;
    let mut discarded = 0.0;
    for i in (1..n).rev() {
        discarded += right_orth(sites, i, policy)?;
    }
    Ok(discarded)
}
