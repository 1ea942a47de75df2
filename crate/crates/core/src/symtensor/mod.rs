//! Block-sparse tensors whose nonzero blocks obey the U(1) fusion rule.
//!
//! Every leg carries a direction and an ordered list of charge sectors. A
//! block is addressed by one charge per leg and is stored only if
//! `sum(incoming charges) - sum(outgoing charges) == 0`. Absent blocks are
//! exact zeros.

mod fuse;
mod layout;
mod serial;
mod svd;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, AddAssign, Neg, Sub};

use ndarray::{ArrayD, Axis, IxDyn, Slice};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

pub use fuse::{FuseGroup, FuseMap};
pub use layout::BlockLayout;
pub use serial::TensorRecord;
pub use svd::{SvdResult, TruncationPolicy};

/// Blocks whose Frobenius norm falls below this are dropped after an operation.
pub const PRUNE_THRESHOLD: f64 = 1e-14;

/// Additive U(1) quantum number.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Charge(pub i32);

impl Charge {
    pub const ZERO: Charge = Charge(0);
}

impl Add for Charge {
    type Output = Charge;
    fn add(self, rhs: Charge) -> Charge {
        Charge(self.0 + rhs.0)
    }
}

impl AddAssign for Charge {
    fn add_assign(&mut self, rhs: Charge) {
        self.0 += rhs.0;
    }
}

impl Sub for Charge {
    type Output = Charge;
    fn sub(self, rhs: Charge) -> Charge {
        Charge(self.0 - rhs.0)
    }
}

impl Neg for Charge {
    type Output = Charge;
    fn neg(self) -> Charge {
        Charge(-self.0)
    }
}

impl std::iter::Sum for Charge {
    fn sum<I: Iterator<Item = Charge>>(iter: I) -> Charge {
        Charge(iter.map(|c| c.0).sum())
    }
}

impl fmt::Display for Charge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Whether charge flows into (`In`) or out of (`Out`) the tensor along a leg.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dir {
    In,
    Out,
}

impl Dir {
    pub fn flip(self) -> Dir {
        match self {
            Dir::In => Dir::Out,
            Dir::Out => Dir::In,
        }
    }

    /// Sign with which a charge on a leg of this direction enters the fusion rule.
    pub fn sign(self) -> i64 {
        match self {
            Dir::In => 1,
            Dir::Out => -1,
        }
    }
}

/// A directed tensor leg split into charge sectors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Leg {
    dir: Dir,
    sectors: Vec<(Charge, usize)>,
}

impl Leg {
    /// Sectors are sorted by charge; duplicate charges and zero dims are rejected.
    pub fn new(dir: Dir, mut sectors: Vec<(Charge, usize)>) -> Result<Leg> {
        sectors.sort_by_key(|&(q, _)| q);
        if sectors.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidLeg(format!("duplicate charge in {sectors:?}")));
        }
        if sectors.iter().any(|&(_, d)| d == 0) {
            return Err(Error::InvalidLeg(format!("zero-dimensional sector in {sectors:?}")));
        }
        Ok(Leg { dir, sectors })
    }

    /// Single sector of charge 0 and dimension 1.
    pub fn trivial(dir: Dir) -> Leg {
        Leg { dir, sectors: vec![(Charge::ZERO, 1)] }
    }

    /// One-dimensional sectors for each of the given charges.
    pub fn unit_sectors(dir: Dir, charges: impl IntoIterator<Item = Charge>) -> Leg {
        let mut qs: Vec<Charge> = charges.into_iter().collect();
        qs.sort();
        qs.dedup();
        Leg { dir, sectors: qs.into_iter().map(|q| (q, 1)).collect() }
    }

    pub fn dir(&self) -> Dir {
        self.dir
    }

    pub fn sectors(&self) -> &[(Charge, usize)] {
        &self.sectors
    }

    pub fn charges(&self) -> impl Iterator<Item = Charge> + '_ {
        self.sectors.iter().map(|&(q, _)| q)
    }

    pub fn dim_of(&self, q: Charge) -> Option<usize> {
        self.sectors
            .binary_search_by_key(&q, |&(c, _)| c)
            .ok()
            .map(|i| self.sectors[i].1)
    }

    /// Offset of the sector `q` in the dense (sector-ordered) index of this leg.
    pub fn offset_of(&self, q: Charge) -> Option<usize> {
        let mut off = 0;
        for &(c, d) in &self.sectors {
            if c == q {
                return Some(off);
            }
            off += d;
        }
        None
    }

    pub fn total_dim(&self) -> usize {
        self.sectors.iter().map(|&(_, d)| d).sum()
    }

    pub fn flipped(&self) -> Leg {
        Leg { dir: self.dir.flip(), sectors: self.sectors.clone() }
    }

    pub fn with_dir(&self, dir: Dir) -> Leg {
        Leg { dir, sectors: self.sectors.clone() }
    }

    /// True when both legs have identical sector lists (directions ignored).
    pub fn same_sectors(&self, other: &Leg) -> bool {
        self.sectors == other.sectors
    }

    /// Union of sectors; common charges must agree on dimension.
    pub fn union(&self, other: &Leg) -> Result<Leg> {
        let mut map: BTreeMap<Charge, usize> = self.sectors.iter().copied().collect();
        for &(q, d) in &other.sectors {
            match map.get(&q) {
                Some(&d0) if d0 != d => {
                    return Err(Error::LegMismatch(format!("charge {q} has dims {d0} and {d}")))
                }
                _ => {
                    map.insert(q, d);
                }
            }
        }
        Ok(Leg { dir: self.dir, sectors: map.into_iter().collect() })
    }

    /// Direct sum: dimensions add on common charges.
    pub fn direct_sum(&self, other: &Leg) -> Leg {
        let mut map: BTreeMap<Charge, usize> = self.sectors.iter().copied().collect();
        for &(q, d) in &other.sectors {
            *map.entry(q).or_insert(0) += d;
        }
        Leg { dir: self.dir, sectors: map.into_iter().collect() }
    }

    /// Keep only the listed charges.
    pub fn restricted(&self, keep: impl Fn(Charge) -> bool) -> Leg {
        Leg { dir: self.dir, sectors: self.sectors.iter().copied().filter(|&(q, _)| keep(q)).collect() }
    }
}

pub type BlockKey = Vec<Charge>;

/// Net incoming charge of a key on the given legs.
pub(crate) fn flux(legs: &[Leg], key: &[Charge]) -> i64 {
    legs.iter().zip(key).map(|(l, q)| l.dir.sign() * q.0 as i64).sum()
}

/// Block-sparse symmetric tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct SymTensor {
    legs: Vec<Leg>,
    blocks: BTreeMap<BlockKey, ArrayD<C64>>,
}

impl SymTensor {
    /// Build a tensor, validating every block against the fusion rule and the leg sectors.
    pub fn new(legs: Vec<Leg>, blocks: impl IntoIterator<Item = (BlockKey, ArrayD<C64>)>) -> Result<SymTensor> {
        let mut map = BTreeMap::new();
        for (key, block) in blocks {
            check_block(&legs, &key, block.shape())?;
            if map.insert(key.clone(), block).is_some() {
                return Err(Error::LegMismatch(format!("duplicate block key {key:?}")));
            }
        }
        Ok(SymTensor { legs, blocks: map })
    }

    /// Tensor with the given legs and no blocks.
    pub fn zeros(legs: Vec<Leg>) -> SymTensor {
        SymTensor { legs, blocks: BTreeMap::new() }
    }

    /// Construct without validation. Callers guarantee the invariants.
    pub(crate) fn from_parts(legs: Vec<Leg>, blocks: BTreeMap<BlockKey, ArrayD<C64>>) -> SymTensor {
        debug_assert!(blocks.iter().all(|(k, b)| check_block(&legs, k, b.shape()).is_ok()));
        SymTensor { legs, blocks }
    }

    /// Bypasses validation entirely; only for fault-injection in the validation harness.
    #[doc(hidden)]
    pub fn from_parts_unchecked(legs: Vec<Leg>, blocks: BTreeMap<BlockKey, ArrayD<C64>>) -> SymTensor {
        SymTensor { legs, blocks }
    }

    /// Re-check every stored block.
    pub fn validate(&self) -> Result<()> {
        for (k, b) in &self.blocks {
            check_block(&self.legs, k, b.shape())?;
        }
        Ok(())
    }

    pub fn legs(&self) -> &[Leg] {
        &self.legs
    }

    pub fn leg(&self, i: usize) -> &Leg {
        &self.legs[i]
    }

    pub fn rank(&self) -> usize {
        self.legs.len()
    }

    pub fn blocks(&self) -> &BTreeMap<BlockKey, ArrayD<C64>> {
        &self.blocks
    }

    pub fn block(&self, key: &[Charge]) -> Option<&ArrayD<C64>> {
        self.blocks.get(key)
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Charges on leg `i` that appear in at least one stored block.
    pub fn active_charges(&self, i: usize) -> Vec<Charge> {
        let mut qs: Vec<Charge> = self.blocks.keys().map(|k| k[i]).collect();
        qs.sort();
        qs.dedup();
        qs
    }

    pub fn norm_sqr(&self) -> f64 {
        self.blocks.values().flat_map(|b| b.iter()).map(|x| x.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `sum conj(self) * other` over matching blocks; legs must agree.
    pub fn inner(&self, other: &SymTensor) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (k, a) in &self.blocks {
            if let Some(b) = other.blocks.get(k) {
                acc += a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum::<C64>();
            }
        }
        acc
    }

    /// Element-wise complex conjugate with every leg direction reversed.
    pub fn conj(&self) -> SymTensor {
        SymTensor {
            legs: self.legs.iter().map(Leg::flipped).collect(),
            blocks: self.blocks.iter().map(|(k, b)| (k.clone(), b.mapv(|x| x.conj()))).collect(),
        }
    }

    pub fn scale(&self, c: C64) -> SymTensor {
        SymTensor {
            legs: self.legs.clone(),
            blocks: self.blocks.iter().map(|(k, b)| (k.clone(), b.mapv(|x| x * c))).collect(),
        }
    }

    /// Blockwise sum over the union of keys. Legs must be identical.
    pub fn add(&self, other: &SymTensor) -> Result<SymTensor> {
        if self.legs != other.legs {
            return Err(Error::LegMismatch("add requires identical legs".into()));
        }
        let mut blocks = self.blocks.clone();
        for (k, b) in &other.blocks {
            match blocks.get_mut(k) {
                Some(acc) => *acc += b,
                None => {
                    blocks.insert(k.clone(), b.clone());
                }
            }
        }
        let mut out = SymTensor { legs: self.legs.clone(), blocks };
        out.prune();
        Ok(out)
    }

    /// Drop blocks whose Frobenius norm is below [`PRUNE_THRESHOLD`].
    pub fn prune(&mut self) {
        self.blocks
            .retain(|_, b| b.iter().map(|x| x.norm_sqr()).sum::<f64>() >= PRUNE_THRESHOLD * PRUNE_THRESHOLD);
    }

    /// Reorder legs: leg `i` of the result is leg `perm[i]` of `self`.
    pub fn permute(&self, perm: &[usize]) -> SymTensor {
        assert_eq!(perm.len(), self.rank(), "permutation length");
        let legs = perm.iter().map(|&p| self.legs[p].clone()).collect();
        let blocks = self
            .blocks
            .iter()
            .map(|(k, b)| {
                let key = perm.iter().map(|&p| k[p]).collect();
                let data = b.view().permuted_axes(IxDyn(perm)).as_standard_layout().into_owned();
                (key, data)
            })
            .collect();
        SymTensor { legs, blocks }
    }

    /// Replace leg `i` by a leg with a superset (or any compatible set) of sectors.
    /// Blocks referencing charges missing from `leg` are an error.
    pub fn with_leg(&self, i: usize, leg: Leg) -> Result<SymTensor> {
        if leg.dir != self.legs[i].dir {
            return Err(Error::LegMismatch(format!("leg {i} direction change")));
        }
        let mut legs = self.legs.clone();
        legs[i] = leg;
        for (k, b) in &self.blocks {
            check_block(&legs, k, b.shape())?;
        }
        Ok(SymTensor { legs, blocks: self.blocks.clone() })
    }

    /// Drop sectors of leg `i` that no block references.
    pub fn trim_leg(&self, i: usize) -> SymTensor {
        let active = self.active_charges(i);
        let mut legs = self.legs.clone();
        legs[i] = self.legs[i].restricted(|q| active.binary_search(&q).is_ok());
        SymTensor { legs, blocks: self.blocks.clone() }
    }

    /// Keep only blocks for which `keep(key)` holds.
    pub fn filter_blocks(&self, keep: impl Fn(&[Charge]) -> bool) -> SymTensor {
        SymTensor {
            legs: self.legs.clone(),
            blocks: self.blocks.iter().filter(|(k, _)| keep(k)).map(|(k, b)| (k.clone(), b.clone())).collect(),
        }
    }

    /// Sum over a one-dimensional-per-sector collapse of leg `i`: every sector
    /// of that leg is reduced to dimension 1 by summing its entries.
    pub fn collapse_leg(&self, i: usize) -> SymTensor {
        let mut legs = self.legs.clone();
        legs[i] = Leg::unit_sectors(self.legs[i].dir, self.legs[i].charges());
        let blocks = self
            .blocks
            .iter()
            .map(|(k, b)| (k.clone(), b.sum_axis(Axis(i)).insert_axis(Axis(i))))
            .collect();
        let mut out = SymTensor { legs, blocks };
        out.prune();
        out
    }

    /// Dense embedding: each leg indexed by its sectors in ascending charge order.
    pub fn to_dense(&self) -> ArrayD<C64> {
        let shape: Vec<usize> = self.legs.iter().map(Leg::total_dim).collect();
        let mut dense = ArrayD::zeros(IxDyn(&shape));
        for (k, b) in &self.blocks {
            let offs: Vec<usize> = k.iter().zip(&self.legs).map(|(q, l)| l.offset_of(*q).unwrap()).collect();
            let mut view = dense.slice_each_axis_mut(|ax| {
                let i = ax.axis.index();
                Slice::from(offs[i]..offs[i] + b.shape()[i])
            });
            view.assign(b);
        }
        dense
    }

    /// Project a dense array onto the symmetric blocks of `legs`.
    ///
    /// Entries outside the allowed blocks must have magnitude at most `tol`;
    /// otherwise the first offending key is reported as a fusion violation.
    pub fn from_dense(legs: Vec<Leg>, dense: &ArrayD<C64>, tol: f64) -> Result<SymTensor> {
        let shape: Vec<usize> = legs.iter().map(Leg::total_dim).collect();
        if dense.shape() != shape.as_slice() {
            return Err(Error::ShapeMismatch { key: vec![], expected: shape, got: dense.shape().to_vec() });
        }
        let mut blocks = BTreeMap::new();
        for_each_key(&legs, |key| {
            let offs: Vec<usize> = key.iter().zip(&legs).map(|(q, l)| l.offset_of(*q).unwrap()).collect();
            let dims: Vec<usize> = key.iter().zip(&legs).map(|(q, l)| l.dim_of(*q).unwrap()).collect();
            let view = dense.slice_each_axis(|ax| {
                let i = ax.axis.index();
                Slice::from(offs[i]..offs[i] + dims[i])
            });
            let fl = flux(&legs, key);
            let nrm: f64 = view.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            if fl == 0 {
                if nrm >= PRUNE_THRESHOLD {
                    blocks.insert(key.to_vec(), view.to_owned());
                }
                Ok(())
            } else if view.iter().any(|x| x.norm() > tol) {
                Err(Error::FusionViolation { key: key.to_vec(), flux: fl })
            } else {
                Ok(())
            }
        })?;
        Ok(SymTensor { legs, blocks })
    }

    /// Contract `a` and `b` over the listed leg pairs.
    ///
    /// The result carries the unpaired legs of `a` followed by those of `b`.
    /// Paired legs must have opposite directions; charges present on both
    /// sides must agree in dimension. A charge present on only one side
    /// contributes nothing.
    pub fn contract(a: &SymTensor, b: &SymTensor, pairs: &[(usize, usize)]) -> Result<SymTensor> {
        for &(ia, ib) in pairs {
            let (la, lb) = (&a.legs[ia], &b.legs[ib]);
            if la.dir == lb.dir {
                return Err(Error::DirectionMismatch(ia, ib));
            }
            for &(q, d) in &la.sectors {
                if let Some(d2) = lb.dim_of(q) {
                    if d2 != d {
                        return Err(Error::SectorMismatch(ia, ib, q));
                    }
                }
            }
        }
        let paired_a: Vec<usize> = pairs.iter().map(|p| p.0).collect();
        let paired_b: Vec<usize> = pairs.iter().map(|p| p.1).collect();
        let free_a: Vec<usize> = (0..a.rank()).filter(|i| !paired_a.contains(i)).collect();
        let free_b: Vec<usize> = (0..b.rank()).filter(|i| !paired_b.contains(i)).collect();

        let mut legs: Vec<Leg> = free_a.iter().map(|&i| a.legs[i].clone()).collect();
        legs.extend(free_b.iter().map(|&i| b.legs[i].clone()));

        let perm_a: Vec<usize> = free_a.iter().chain(&paired_a).copied().collect();
        let perm_b: Vec<usize> = paired_b.iter().chain(&free_b).copied().collect();

        // b blocks as (k x n) matrices, grouped by the charges on the paired legs.
        let mut b_groups: HashMap<Vec<Charge>, Vec<(Vec<Charge>, Vec<usize>, ndarray::Array2<C64>)>> =
            HashMap::new();
        for (kb, blk) in &b.blocks {
            let pk: Vec<Charge> = paired_b.iter().map(|&i| kb[i]).collect();
            let free_key: Vec<Charge> = free_b.iter().map(|&i| kb[i]).collect();
            let free_dims: Vec<usize> = free_b.iter().map(|&i| blk.shape()[i]).collect();
            let k: usize = paired_b.iter().map(|&i| blk.shape()[i]).product();
            let n: usize = free_dims.iter().product();
            let mat = blk
                .view()
                .permuted_axes(IxDyn(&perm_b))
                .as_standard_layout()
                .into_owned()
                .into_shape_with_order((k, n))
                .expect("contiguous");
            b_groups.entry(pk).or_default().push((free_key, free_dims, mat));
        }

        let a_blocks: Vec<(&BlockKey, &ArrayD<C64>)> = a.blocks.iter().collect();
        let partial: Vec<Vec<(BlockKey, ArrayD<C64>)>> = a_blocks
            .par_iter()
            .map(|(ka, blk)| {
                let pk: Vec<Charge> = paired_a.iter().map(|&i| ka[i]).collect();
                let Some(group) = b_groups.get(&pk) else { return Vec::new() };
                let free_key: Vec<Charge> = free_a.iter().map(|&i| ka[i]).collect();
                let free_dims: Vec<usize> = free_a.iter().map(|&i| blk.shape()[i]).collect();
                let m: usize = free_dims.iter().product();
                let k: usize = paired_a.iter().map(|&i| blk.shape()[i]).product();
                let mat = blk
                    .view()
                    .permuted_axes(IxDyn(&perm_a))
                    .as_standard_layout()
                    .into_owned()
                    .into_shape_with_order((m, k))
                    .expect("contiguous");
                group
                    .iter()
                    .map(|(bkey, bdims, bmat)| {
                        let prod = mat.dot(bmat);
                        let mut key = free_key.clone();
                        key.extend_from_slice(bkey);
                        let mut shape = free_dims.clone();
                        shape.extend_from_slice(bdims);
                        (key, prod.into_shape_with_order(IxDyn(&shape)).expect("contiguous"))
                    })
                    .collect()
            })
            .collect();

        let mut blocks: BTreeMap<BlockKey, ArrayD<C64>> = BTreeMap::new();
        for (key, data) in partial.into_iter().flatten() {
            match blocks.get_mut(&key) {
                Some(acc) => *acc += &data,
                None => {
                    blocks.insert(key, data);
                }
            }
        }
        let mut out = SymTensor { legs, blocks };
        out.prune();
        Ok(out)
    }
}

fn check_block(legs: &[Leg], key: &[Charge], shape: &[usize]) -> Result<()> {
    if key.len() != legs.len() || shape.len() != legs.len() {
        return Err(Error::ShapeMismatch {
            key: key.to_vec(),
            expected: legs.iter().map(|_| 0).collect(),
            got: shape.to_vec(),
        });
    }
    let mut expected = Vec::with_capacity(legs.len());
    for (i, (leg, &q)) in legs.iter().zip(key).enumerate() {
        match leg.dim_of(q) {
            Some(d) => expected.push(d),
            None => return Err(Error::UnknownCharge { leg: i, charge: q }),
        }
    }
    let fl = flux(legs, key);
    if fl != 0 {
        return Err(Error::FusionViolation { key: key.to_vec(), flux: fl });
    }
    if expected != shape {
        return Err(Error::ShapeMismatch { key: key.to_vec(), expected, got: shape.to_vec() });
    }
    Ok(())
}

/// Visit every charge tuple over `legs` (fusion-allowed or not).
fn for_each_key(legs: &[Leg], mut f: impl FnMut(&[Charge]) -> Result<()>) -> Result<()> {
    fn rec(legs: &[Leg], key: &mut Vec<Charge>, f: &mut dyn FnMut(&[Charge]) -> Result<()>) -> Result<()> {
        if key.len() == legs.len() {
            return f(key);
        }
        for q in legs[key.len()].charges() {
            key.push(q);
            rec(legs, key, f)?;
            key.pop();
        }
        Ok(())
    }
    let mut key = Vec::with_capacity(legs.len());
    rec(legs, &mut key, &mut f)
}

/// Visit every fusion-allowed charge tuple over `legs`.
pub(crate) fn allowed_keys(legs: &[Leg]) -> Vec<BlockKey> {
    let mut out = Vec::new();
    if legs.is_empty() {
        return out;
    }
    let n = legs.len();
    let last = &legs[n - 1];
    let mut key = Vec::with_capacity(n);
    fn rec(legs: &[Leg], last: &Leg, key: &mut Vec<Charge>, acc: i64, out: &mut Vec<BlockKey>) {
        if key.len() == legs.len() - 1 {
            // need acc + sign(last) * q == 0
            let q = -acc * last.dir.sign();
            let q = Charge(q as i32);
            if last.dim_of(q).is_some() {
                let mut k = key.clone();
                k.push(q);
                out.push(k);
            }
            return;
        }
        let leg = &legs[key.len()];
        for q in leg.charges() {
            key.push(q);
            rec(legs, last, key, acc + leg.dir.sign() * q.0 as i64, out);
            key.pop();
        }
    }
    rec(legs, last, &mut key, 0, &mut out);
    out.sort();
    out
}

#[cfg(test)]
mod tests;
