use std::collections::BTreeMap;

use ndarray::{ArrayD, IxDyn};

use super::{allowed_keys, BlockKey, Leg, SymTensor};
use crate::C64;

/// Every fusion-allowed block of a fixed set of legs, laid out contiguously.
///
/// Used to treat symmetric tensors as flat vectors (e.g. inside an iterative
/// eigensolver). Flattening drops blocks outside the layout, which acts as a
/// projection onto the layout's space.
#[derive(Clone, Debug)]
pub struct BlockLayout {
    legs: Vec<Leg>,
    entries: Vec<(BlockKey, Vec<usize>, usize)>,
    index: BTreeMap<BlockKey, usize>,
    dim: usize,
}

impl BlockLayout {
    pub fn new(legs: Vec<Leg>) -> BlockLayout {
        Self::with_filter(legs, |_| true)
    }

    /// Layout restricted to the allowed keys accepted by `keep`.
    pub fn with_filter(legs: Vec<Leg>, keep: impl Fn(&[super::Charge]) -> bool) -> BlockLayout {
        let mut entries = Vec::new();
        let mut index = BTreeMap::new();
        let mut off = 0;
        for key in allowed_keys(&legs).into_iter().filter(|k| keep(k)) {
            let shape: Vec<usize> = key.iter().zip(&legs).map(|(q, l)| l.dim_of(*q).unwrap()).collect();
            let size: usize = shape.iter().product();
            index.insert(key.clone(), entries.len());
            entries.push((key, shape, off));
            off += size;
        }
        BlockLayout { legs, entries, index, dim: off }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn legs(&self) -> &[Leg] {
        &self.legs
    }

    pub fn num_blocks(&self) -> usize {
        self.entries.len()
    }

    pub fn flatten(&self, t: &SymTensor) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.dim];
        for (key, blk) in t.blocks() {
            if let Some(&e) = self.index.get(key) {
                let off = self.entries[e].2;
                for (dst, src) in out[off..].iter_mut().zip(blk.as_standard_layout().iter()) {
                    *dst = *src;
                }
            }
        }
        out
    }

    pub fn unflatten(&self, v: &[C64]) -> SymTensor {
        assert_eq!(v.len(), self.dim);
        let mut blocks = BTreeMap::new();
        for (key, shape, off) in &self.entries {
            let size: usize = shape.iter().product();
            let data = &v[*off..off + size];
            if data.iter().all(|x| *x == C64::new(0.0, 0.0)) {
                continue;
            }
            blocks.insert(key.clone(), ArrayD::from_shape_vec(IxDyn(shape), data.to_vec()).unwrap());
        }
        SymTensor::from_parts(self.legs.clone(), blocks)
    }
}
