use ndarray::{Array2, ArrayD, IxDyn};

use super::{chain, direct_sum};
use crate::error::{Error, Result};
use crate::space::LocalSpace;
use crate::symtensor::{Charge, Dir, Leg, SymTensor, TruncationPolicy};
use crate::C64;

/// Adaptively symmetric matrix product operator. Site `l` has legs
/// `(sigma: In, tau: Out, b_l: In, b_{l+1}: Out)`; `b_1` lists the total
/// charge shifts the operator can produce.
#[derive(Clone, Debug, PartialEq)]
pub struct AsMpo {
    sites: Vec<SymTensor>,
    spaces: Vec<LocalSpace>,
}

impl AsMpo {
    /// Validate and wrap site tensors; first-bond sectors are summed down to dimension 1.
    pub fn new(sites: Vec<SymTensor>, spaces: Vec<LocalSpace>) -> Result<AsMpo> {
        let mut mpo = AsMpo { sites, spaces };
        mpo.validate()?;
        mpo.normalize_boundary();
        Ok(mpo)
    }

    pub(crate) fn from_parts(sites: Vec<SymTensor>, spaces: Vec<LocalSpace>) -> AsMpo {
        let mut mpo = AsMpo { sites, spaces };
        mpo.normalize_boundary();
        debug_assert!(mpo.validate().is_ok(), "{:?}", mpo.validate());
        mpo
    }

    fn normalize_boundary(&mut self) {
        let first = &self.sites[0];
        if first.leg(2).sectors().iter().any(|&(_, d)| d > 1) {
            self.sites[0] = first.collapse_leg(2);
        }
        self.sites[0] = self.sites[0].trim_leg(2);
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.sites.len();
        if n == 0 {
            return Err(Error::EmptyChain);
        }
        if self.spaces.len() != n {
            return Err(Error::LengthMismatch(n, self.spaces.len()));
        }
        for (l, t) in self.sites.iter().enumerate() {
            if t.rank() != 4 {
                return Err(Error::LegMismatch(format!("operator site {l} has rank {}", t.rank())));
            }
            if t.leg(0) != &self.spaces[l].leg(Dir::In) || t.leg(1) != &self.spaces[l].leg(Dir::Out) {
                return Err(Error::PhysicalSectorMismatch(l));
            }
            if t.leg(2).dir() != Dir::In || t.leg(3).dir() != Dir::Out {
                return Err(Error::LegMismatch(format!("operator site {l} bond directions")));
            }
            t.validate()?;
            if l + 1 < n && !t.leg(3).same_sectors(self.sites[l + 1].leg(2)) {
                return Err(Error::LegMismatch(format!("operator bond between sites {l} and {}", l + 1)));
            }
        }
        if self.sites[n - 1].leg(3) != &Leg::trivial(Dir::Out) {
            return Err(Error::LegMismatch("last operator bond must be the single charge-0 sector".into()));
        }
        Ok(())
    }

    /// Product operator `ops[0] (x) ops[1] (x) ...`, each factor given in the
    /// natural basis (rows = output state). Every factor must have a definite
    /// charge shift; the shifts are threaded leftwards through the bonds.
    pub fn product(spaces: Vec<LocalSpace>, ops: &[Array2<C64>]) -> Result<AsMpo> {
        let n = spaces.len();
        if n == 0 {
            return Err(Error::EmptyChain);
        }
        if ops.len() != n {
            return Err(Error::LengthMismatch(n, ops.len()));
        }
        let mut sites = vec![SymTensor::zeros(vec![]); n];
        let mut right = Charge::ZERO;
        for l in (0..n).rev() {
            spaces[l].check_operator(&ops[l])?;
            let shift = spaces[l].shift_of(&ops[l], 0.0).ok_or(Error::IndefiniteShift(l))?;
            sites[l] = operator_site(&spaces[l], &ops[l], right + shift, right)?;
            right += shift;
        }
        AsMpo::new(sites, spaces)
    }

    /// Identity operator with bond dimension 1.
    pub fn identity(spaces: Vec<LocalSpace>) -> AsMpo {
        let ops: Vec<Array2<C64>> = spaces.iter().map(|sp| Array2::eye(sp.dim())).collect();
        AsMpo::product(spaces, &ops).expect("identity is charge-neutral")
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[SymTensor] {
        &self.sites
    }

    pub fn site(&self, l: usize) -> &SymTensor {
        &self.sites[l]
    }

    pub fn spaces(&self) -> &[LocalSpace] {
        &self.spaces
    }

    /// Total charge shifts listed on the first bond.
    pub fn b1_charges(&self) -> Vec<Charge> {
        self.sites[0].leg(2).charges().collect()
    }

    pub fn max_bond(&self) -> usize {
        self.sites.iter().map(|t| t.leg(3).total_dim()).max().unwrap_or(1)
    }

    pub fn bond_dims(&self) -> Vec<usize> {
        self.sites[..self.len() - 1].iter().map(|t| t.leg(3).total_dim()).collect()
    }

    pub fn scale(&self, c: C64) -> AsMpo {
        let mut out = self.clone();
        out.sites[0] = out.sites[0].scale(c);
        out
    }

    /// Operator sum by direct sum on every bond (uncompressed).
    pub fn add(&self, other: &AsMpo) -> Result<AsMpo> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch(self.len(), other.len()));
        }
        let n = self.len();
        let mut sites = Vec::with_capacity(n);
        for l in 0..n {
            if self.spaces[l] != other.spaces[l] {
                return Err(Error::PhysicalSectorMismatch(l));
            }
            sites.push(direct_sum(&self.sites[l], &other.sites[l], &[2, 3])?);
        }
        sites[n - 1] = sites[n - 1].collapse_leg(3);
        Ok(AsMpo::from_parts(sites, self.spaces.clone()))
    }

    /// Compress the bonds by treating `(sigma, tau)` as one physical leg.
    /// Returns the result and the accumulated discarded weight.
    pub fn compress(&self, policy: &TruncationPolicy) -> Result<(AsMpo, f64)> {
        let mut flat = Vec::with_capacity(self.len());
        let mut groups = Vec::with_capacity(self.len());
        for t in &self.sites {
            if t.is_empty() {
                return Ok((AsMpo::zero(self.spaces.clone()), 0.0));
            }
            let (f, map) = t.fuse_directed(&[vec![0, 1], vec![2], vec![3]], &[Dir::Out, Dir::In, Dir::Out])?;
            flat.push(f);
            groups.push(map.groups()[0].clone());
        }
        let err = chain::compress(&mut flat, None, policy)?;
        let sites = flat
            .iter()
            .zip(&groups)
            .map(|(t, g)| t.with_leg(0, g.fused_leg().clone()).and_then(|t| t.split_leg(0, g)))
            .collect::<Result<Vec<_>>>()?;
        Ok((AsMpo::from_parts(sites, self.spaces.clone()), err))
    }

    /// The zero operator.
    pub fn zero(spaces: Vec<LocalSpace>) -> AsMpo {
        let sites = spaces
            .iter()
            .map(|sp| SymTensor::zeros(vec![sp.leg(Dir::In), sp.leg(Dir::Out), Leg::trivial(Dir::In), Leg::trivial(Dir::Out)]))
            .collect();
        AsMpo { sites, spaces }
    }

    pub fn is_zero(&self) -> bool {
        self.sites.iter().any(|t| t.is_empty())
    }
}

/// One operator site for a factor `op` of definite shift, with one-dimensional
/// bonds carrying `left` and `right`; requires `left - right = shift(op)`.
pub fn operator_site(space: &LocalSpace, op: &Array2<C64>, left: Charge, right: Charge) -> Result<SymTensor> {
    let legs = vec![
        space.leg(Dir::In),
        space.leg(Dir::Out),
        Leg::unit_sectors(Dir::In, [left]),
        Leg::unit_sectors(Dir::Out, [right]),
    ];
    let mut blocks: std::collections::BTreeMap<Vec<Charge>, ArrayD<C64>> = Default::default();
    for ((r, c), v) in op.indexed_iter() {
        if *v == C64::new(0.0, 0.0) {
            continue;
        }
        let (qr, or) = space.locate(r);
        let (qc, oc) = space.locate(c);
        if qr - qc != left - right {
            return Err(Error::FusionViolation { key: vec![qc, qr, left, right], flux: (qc - qr + left - right).0 as i64 });
        }
        let key = vec![qc, qr, left, right];
        let shape = [legs[0].dim_of(qc).unwrap(), legs[1].dim_of(qr).unwrap(), 1, 1];
        let blk = blocks.entry(key).or_insert_with(|| ArrayD::zeros(IxDyn(&shape)));
        blk[[oc, or, 0, 0]] = *v;
    }
    SymTensor::new(legs, blocks)
}
