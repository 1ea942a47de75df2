use std::collections::{BTreeMap, HashMap};

use ndarray::{ArrayD, Axis, IxDyn, Slice};

use super::{Charge, Dir, Leg, SymTensor, PRUNE_THRESHOLD};
use crate::error::{Error, Result};
use crate::C64;

#[derive(Clone, Debug)]
struct SubSector {
    charges: Vec<Charge>,
    offset: usize,
    dims: Vec<usize>,
}

/// Layout of one fused leg: which member-charge tuple occupies which slice
/// of each fused sector.
#[derive(Clone, Debug)]
pub struct FuseGroup {
    members: Vec<usize>,
    member_legs: Vec<Leg>,
    fused: Leg,
    layout: BTreeMap<Charge, Vec<SubSector>>,
    lookup: HashMap<Vec<Charge>, (Charge, usize)>,
}

impl FuseGroup {
    /// Fuse `member_legs` into one leg of direction `dir`.
    ///
    /// A member tuple with net incoming charge `f` lands on fused charge `f`
    /// for an incoming fused leg and `-f` for an outgoing one, so the fusion
    /// rule of any block is unchanged by the fusion.
    pub fn new(members: Vec<usize>, member_legs: Vec<Leg>, dir: Dir) -> FuseGroup {
        let mut layout: BTreeMap<Charge, Vec<SubSector>> = BTreeMap::new();
        let mut lookup = HashMap::new();
        let mut fill: BTreeMap<Charge, usize> = BTreeMap::new();
        let mut tuple = Vec::with_capacity(member_legs.len());
        let mut dims = Vec::with_capacity(member_legs.len());
        #[allow(clippy::too_many_arguments)]
        fn rec(
            legs: &[Leg],
            dir: Dir,
            tuple: &mut Vec<Charge>,
            dims: &mut Vec<usize>,
            layout: &mut BTreeMap<Charge, Vec<SubSector>>,
            lookup: &mut HashMap<Vec<Charge>, (Charge, usize)>,
            fill: &mut BTreeMap<Charge, usize>,
        ) {
            if tuple.len() == legs.len() {
                let f: i64 = legs.iter().zip(tuple.iter()).map(|(l, q)| l.dir().sign() * q.0 as i64).sum();
                let fq = Charge((f * dir.sign()) as i32);
                let size: usize = dims.iter().product();
                let off = fill.entry(fq).or_insert(0);
                layout.entry(fq).or_default().push(SubSector {
                    charges: tuple.clone(),
                    offset: *off,
                    dims: dims.clone(),
                });
                lookup.insert(tuple.clone(), (fq, *off));
                *off += size;
                return;
            }
            for &(q, d) in legs[tuple.len()].sectors() {
                tuple.push(q);
                dims.push(d);
                rec(legs, dir, tuple, dims, layout, lookup, fill);
                tuple.pop();
                dims.pop();
            }
        }
        rec(&member_legs, dir, &mut tuple, &mut dims, &mut layout, &mut lookup, &mut fill);
        let fused = Leg { dir, sectors: fill.into_iter().collect() };
        FuseGroup { members, member_legs, fused, layout, lookup }
    }

    pub fn fused_leg(&self) -> &Leg {
        &self.fused
    }

    pub fn member_legs(&self) -> &[Leg] {
        &self.member_legs
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    /// Fused charge and offset of a member-charge tuple.
    pub fn locate(&self, charges: &[Charge]) -> Option<(Charge, usize)> {
        self.lookup.get(charges).copied()
    }
}

/// Record of a fusion, sufficient to undo it exactly.
#[derive(Clone, Debug)]
pub struct FuseMap {
    groups: Vec<FuseGroup>,
    original_rank: usize,
}

impl FuseMap {
    pub fn groups(&self) -> &[FuseGroup] {
        &self.groups
    }
}

impl SymTensor {
    /// Fuse each group of legs into a single leg. Every group must contain
    /// legs of a single direction; the fused leg keeps that direction and
    /// carries the sum of member charges. Result legs follow group order.
    pub fn fuse_legs(&self, groups: &[Vec<usize>]) -> Result<(SymTensor, FuseMap)> {
        let mut dirs = Vec::with_capacity(groups.len());
        for (g, members) in groups.iter().enumerate() {
            let Some(&first) = members.first() else {
                return Err(Error::LegMismatch(format!("fuse group {g} is empty")));
            };
            let dir = self.legs[first].dir();
            if members.iter().any(|&m| self.legs[m].dir() != dir) {
                return Err(Error::MixedDirectionGroup(g));
            }
            dirs.push(dir);
        }
        self.fuse_directed(groups, &dirs)
    }

    /// Fusion allowing mixed-direction groups; the fused leg of group `g` has direction `dirs[g]`.
    pub(crate) fn fuse_directed(&self, groups: &[Vec<usize>], dirs: &[Dir]) -> Result<(SymTensor, FuseMap)> {
        let mut seen = vec![false; self.rank()];
        for members in groups {
            for &m in members {
                if m >= self.rank() || seen[m] {
                    return Err(Error::LegMismatch("fuse groups must partition the legs".into()));
                }
                seen[m] = true;
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::LegMismatch("fuse groups must partition the legs".into()));
        }
        let fgroups: Vec<FuseGroup> = groups
            .iter()
            .zip(dirs)
            .map(|(m, &d)| FuseGroup::new(m.clone(), m.iter().map(|&i| self.legs[i].clone()).collect(), d))
            .collect();
        let perm: Vec<usize> = groups.iter().flatten().copied().collect();
        let legs: Vec<Leg> = fgroups.iter().map(|g| g.fused.clone()).collect();

        let mut blocks: BTreeMap<Vec<Charge>, ArrayD<C64>> = BTreeMap::new();
        for (key, blk) in &self.blocks {
            let mut fkey = Vec::with_capacity(groups.len());
            let mut offs = Vec::with_capacity(groups.len());
            let mut sub_shape = Vec::with_capacity(groups.len());
            for g in &fgroups {
                let sub: Vec<Charge> = g.members.iter().map(|&i| key[i]).collect();
                let (fq, off) = g.lookup[&sub];
                fkey.push(fq);
                offs.push(off);
                sub_shape.push(g.members.iter().map(|&i| blk.shape()[i]).product::<usize>());
            }
            let data = blk
                .view()
                .permuted_axes(IxDyn(&perm))
                .as_standard_layout()
                .into_owned()
                .into_shape_with_order(IxDyn(&sub_shape))
                .expect("contiguous");
            let target = blocks.entry(fkey.clone()).or_insert_with(|| {
                let shape: Vec<usize> = fkey.iter().zip(&legs).map(|(q, l)| l.dim_of(*q).unwrap()).collect();
                ArrayD::zeros(IxDyn(&shape))
            });
            target
                .slice_each_axis_mut(|ax| {
                    let i = ax.axis.index();
                    Slice::from(offs[i]..offs[i] + sub_shape[i])
                })
                .assign(&data);
        }
        let out = SymTensor::from_parts(legs, blocks);
        Ok((out, FuseMap { groups: fgroups, original_rank: self.rank() }))
    }

    /// Undo [`SymTensor::fuse_legs`]: restores the original legs and order.
    pub fn split_legs(&self, map: &FuseMap) -> Result<SymTensor> {
        if self.rank() != map.groups.len() {
            return Err(Error::LegMismatch("tensor rank does not match the fuse map".into()));
        }
        let mut t = self.clone();
        for g in (0..map.groups.len()).rev() {
            t = t.split_leg(g, &map.groups[g])?;
        }
        let order: Vec<usize> = map.groups.iter().flat_map(|g| g.members.iter().copied()).collect();
        let mut inv = vec![0; map.original_rank];
        for (pos, &orig) in order.iter().enumerate() {
            inv[orig] = pos;
        }
        Ok(t.permute(&inv))
    }

    /// Split leg `i` (which must be `group`'s fused leg) back into the
    /// group's member legs, inserted in place.
    pub fn split_leg(&self, i: usize, group: &FuseGroup) -> Result<SymTensor> {
        let leg = &self.legs[i];
        if leg.dir() != group.fused.dir() {
            return Err(Error::LegMismatch(format!("leg {i} direction differs from the fused leg")));
        }
        for &(q, d) in leg.sectors() {
            if group.fused.dim_of(q) != Some(d) {
                return Err(Error::LegMismatch(format!("leg {i} sector {q} is not in the fuse layout")));
            }
        }
        let mut legs: Vec<Leg> = self.legs[..i].to_vec();
        legs.extend(group.member_legs.iter().cloned());
        legs.extend(self.legs[i + 1..].iter().cloned());

        let mut blocks = BTreeMap::new();
        for (key, blk) in &self.blocks {
            let Some(subs) = group.layout.get(&key[i]) else { continue };
            for sub in subs {
                let size: usize = sub.dims.iter().product();
                let piece = blk.slice_axis(Axis(i), Slice::from(sub.offset..sub.offset + size));
                if piece.iter().map(|x| x.norm_sqr()).sum::<f64>() < PRUNE_THRESHOLD * PRUNE_THRESHOLD {
                    continue;
                }
                let mut shape: Vec<usize> = blk.shape()[..i].to_vec();
                shape.extend_from_slice(&sub.dims);
                shape.extend_from_slice(&blk.shape()[i + 1..]);
                let data = piece
                    .as_standard_layout()
                    .into_owned()
                    .into_shape_with_order(IxDyn(&shape))
                    .expect("contiguous");
                let mut nkey: Vec<Charge> = key[..i].to_vec();
                nkey.extend_from_slice(&sub.charges);
                nkey.extend_from_slice(&key[i + 1..]);
                blocks.insert(nkey, data);
            }
        }
        Ok(SymTensor::from_parts(legs, blocks))
    }
}
