use std::collections::BTreeMap;

use ndarray::{Array2, ArrayD, IxDyn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Charge, Dir, Leg, SymTensor};
use crate::error::{Error, Result};
use crate::{linalg, C64};

/// Singular values at or below this fraction of the largest one are treated as exact zeros.
pub const ZERO_SINGULAR_VALUE: f64 = 1e-14;

/// Bond truncation: keep at most `max_bond` singular values overall and
/// discard a tail whose weight is at most `rel_tol` of the total.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    pub max_bond: usize,
    pub rel_tol: f64,
}

impl TruncationPolicy {
    pub fn new(max_bond: usize, rel_tol: f64) -> TruncationPolicy {
        assert!(max_bond >= 1, "max_bond must be positive");
        assert!(rel_tol >= 0.0, "rel_tol must be non-negative");
        TruncationPolicy { max_bond, rel_tol }
    }

    /// No truncation beyond dropping numerically zero singular values.
    pub fn exact() -> TruncationPolicy {
        TruncationPolicy { max_bond: usize::MAX, rel_tol: 0.0 }
    }
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy::exact()
    }
}

/// Output of [`SymTensor::block_svd`].
#[derive(Clone, Debug)]
pub struct SvdResult {
    /// Row legs followed by a new outgoing bond leg.
    pub u: SymTensor,
    /// Diagonal, legs (incoming bond, outgoing bond).
    pub s: SymTensor,
    /// New incoming bond leg followed by the column legs.
    pub v: SymTensor,
    /// Dropped weight relative to the total: `sum(dropped s^2) / sum(all s^2)`.
    pub discarded_weight: f64,
    /// Kept singular values with the charge of their bond sector, descending.
    pub singular_values: Vec<(Charge, f64)>,
}

impl SvdResult {
    /// `s * v`, i.e. the singular values absorbed to the right.
    pub fn sv(&self) -> SymTensor {
        SymTensor::contract(&self.s, &self.v, &[(1, 0)]).expect("s and v share the bond")
    }

    /// `u * s`, i.e. the singular values absorbed to the left.
    pub fn us(&self) -> SymTensor {
        let r = self.u.rank();
        SymTensor::contract(&self.u, &self.s, &[(r - 1, 0)]).expect("u and s share the bond")
    }
}

struct SectorSvd {
    charge: Charge,
    u: Array2<C64>,
    s: Vec<f64>,
    vt: Array2<C64>,
}

impl SymTensor {
    /// Blockwise SVD across the bipartition `row_legs | col_legs`.
    ///
    /// Rows and columns are fused per charge sector and each sector matrix is
    /// decomposed densely. Singular values are pooled across sectors, sorted
    /// descending (ties keep the smaller charge first) and truncated under
    /// `policy`.
    pub fn block_svd(&self, row_legs: &[usize], col_legs: &[usize], policy: &TruncationPolicy) -> Result<SvdResult> {
        if self.is_empty() {
            return Err(Error::EmptyTensor);
        }
        let (fused, map) = self.fuse_directed(&[row_legs.to_vec(), col_legs.to_vec()], &[Dir::In, Dir::Out])?;
        let row_group = &map.groups()[0];
        let col_group = &map.groups()[1];

        let sector_mats: Vec<(Charge, &ArrayD<C64>)> = fused.blocks.iter().map(|(k, b)| (k[0], b)).collect();
        let mut sectors: Vec<SectorSvd> = sector_mats
            .par_iter()
            .map(|(q, blk)| {
                let (m, n) = (blk.shape()[0], blk.shape()[1]);
                let mat = blk.view().into_shape_with_order((m, n)).expect("2d").to_owned();
                let (u, s, vt) = linalg::svd(&mat);
                SectorSvd { charge: *q, u, s, vt }
            })
            .collect();
        sectors.sort_by_key(|s| s.charge);

        let mut pool: Vec<(f64, Charge, usize)> = sectors
            .iter()
            .flat_map(|sec| sec.s.iter().enumerate().map(move |(i, &v)| (v, sec.charge, i)))
            .collect();
        pool.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let total: f64 = pool.iter().map(|p| p.0 * p.0).sum();
        if total == 0.0 {
            return Err(Error::EmptyTensor);
        }
        let smax = pool[0].0;
        let nonzero = pool.iter().take_while(|p| p.0 > ZERO_SINGULAR_VALUE * smax).count().max(1);

        // tail[k] = weight of pool[k..]
        let mut tail = vec![0.0; pool.len() + 1];
        for k in (0..pool.len()).rev() {
            tail[k] = tail[k + 1] + pool[k].0 * pool[k].0;
        }
        let mut keep = nonzero;
        if policy.rel_tol > 0.0 {
            keep = (1..=nonzero).find(|&k| tail[k] <= policy.rel_tol * total).unwrap_or(nonzero);
        }
        keep = keep.min(policy.max_bond).max(1);
        let discarded_weight = tail[keep] / total;

        let mut kept_per_sector: BTreeMap<Charge, usize> = BTreeMap::new();
        for p in &pool[..keep] {
            *kept_per_sector.entry(p.1).or_insert(0) += 1;
        }
        let singular_values = pool[..keep].iter().map(|p| (p.1, p.0)).collect();

        let bond_out = Leg::new(Dir::Out, kept_per_sector.iter().map(|(&q, &k)| (q, k)).collect())?;
        let bond_in = bond_out.flipped();

        let mut ublocks = BTreeMap::new();
        let mut sblocks = BTreeMap::new();
        let mut vblocks = BTreeMap::new();
        for sec in &sectors {
            let Some(&k) = kept_per_sector.get(&sec.charge) else { continue };
            let q = sec.charge;
            let m = sec.u.nrows();
            let n = sec.vt.ncols();
            let u = sec.u.slice(ndarray::s![.., ..k]).to_owned();
            let vt = sec.vt.slice(ndarray::s![..k, ..]).to_owned();
            ublocks.insert(vec![q, q], u.into_shape_with_order(IxDyn(&[m, k])).unwrap());
            vblocks.insert(vec![q, q], vt.into_shape_with_order(IxDyn(&[k, n])).unwrap());
            let mut s = ArrayD::zeros(IxDyn(&[k, k]));
            for i in 0..k {
                s[[i, i]] = C64::new(sec.s[i], 0.0);
            }
            sblocks.insert(vec![q, q], s);
        }
        let u_fused = SymTensor::from_parts(vec![row_group.fused_leg().clone(), bond_out.clone()], ublocks);
        let v_fused = SymTensor::from_parts(vec![bond_in.clone(), col_group.fused_leg().clone()], vblocks);
        let s = SymTensor::from_parts(vec![bond_in, bond_out], sblocks);
        let u = u_fused.split_leg(0, row_group)?;
        let v = v_fused.split_leg(1, col_group)?;
        Ok(SvdResult { u, s, v, discarded_weight, singular_values })
    }
}
