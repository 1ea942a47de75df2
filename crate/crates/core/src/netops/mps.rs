use std::collections::{BTreeMap, BTreeSet};

use ndarray::{ArrayD, IxDyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{chain, direct_sum, AsMpo};
use crate::error::{Error, Result};
use crate::space::LocalSpace;
use crate::symtensor::{Charge, Dir, Leg, SymTensor, TruncationPolicy};
use crate::C64;

/// Adaptively symmetric matrix product state.
#[derive(Clone, Debug, PartialEq)]
pub struct AsMps {
    sites: Vec<SymTensor>,
    spaces: Vec<LocalSpace>,
    center: Option<usize>,
}

impl AsMps {
    /// Validate and wrap site tensors. First-bond sectors wider than one are
    /// summed down to dimension 1, which leaves every amplitude unchanged.
    pub fn new(sites: Vec<SymTensor>, spaces: Vec<LocalSpace>) -> Result<AsMps> {
        let mut mps = AsMps { sites, spaces, center: None };
        mps.validate()?;
        mps.normalize_boundary();
        Ok(mps)
    }

    pub(crate) fn from_parts(sites: Vec<SymTensor>, spaces: Vec<LocalSpace>, center: Option<usize>) -> AsMps {
        let mut mps = AsMps { sites, spaces, center };
        mps.normalize_boundary();
        debug_assert!(mps.validate().is_ok(), "{:?}", mps.validate());
        mps
    }

    fn normalize_boundary(&mut self) {
        let first = &self.sites[0];
        if first.leg(1).sectors().iter().any(|&(_, d)| d > 1) {
            self.sites[0] = first.collapse_leg(1);
            self.center = None;
        }
        self.sites[0] = self.sites[0].trim_leg(1);
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
            if t.rank() != 3 {
                return Err(Error::LegMismatch(format!("site {l} has rank {}", t.rank())));
            }
            if t.leg(0) != &self.spaces[l].leg(Dir::Out) {
                return Err(Error::PhysicalSectorMismatch(l));
            }
            if t.leg(1).dir() != Dir::In || t.leg(2).dir() != Dir::Out {
                return Err(Error::LegMismatch(format!("site {l} bond directions")));
            }
            t.validate()?;
            if l + 1 < n && !t.leg(2).same_sectors(self.sites[l + 1].leg(1)) {
                return Err(Error::LegMismatch(format!("bond between sites {l} and {}", l + 1)));
            }
        }
        if self.sites[n - 1].leg(2) != &Leg::trivial(Dir::Out) {
            return Err(Error::LegMismatch("last bond must be the single charge-0 sector".into()));
        }
        Ok(())
    }

    /// Product state from per-site amplitude vectors in the natural basis.
    ///
    /// Bonds have dimension 1 per charge; a site amplitude spread over several
    /// charges simply makes the bond multi-valued.
    pub fn product_state(spaces: Vec<LocalSpace>, amplitudes: &[Vec<C64>]) -> Result<AsMps> {
        let n = spaces.len();
        if n == 0 {
            return Err(Error::EmptyChain);
        }
        if amplitudes.len() != n {
            return Err(Error::LengthMismatch(n, amplitudes.len()));
        }
        let mut sites = vec![SymTensor::zeros(vec![]); n];
        let mut right: Vec<Charge> = vec![Charge::ZERO];
        for l in (0..n).rev() {
            let sp = &spaces[l];
            let amp = &amplitudes[l];
            if amp.len() != sp.dim() {
                return Err(Error::LengthMismatch(sp.dim(), amp.len()));
            }
            let phys = sp.leg(Dir::Out);
            let mut per_sector: BTreeMap<Charge, Vec<C64>> = BTreeMap::new();
            for (i, &a) in amp.iter().enumerate() {
                let (q, off) = sp.locate(i);
                let v = per_sector.entry(q).or_insert_with(|| vec![C64::new(0.0, 0.0); phys.dim_of(q).unwrap()]);
                v[off] = a;
            }
            per_sector.retain(|_, v| v.iter().any(|x| x.norm() > 0.0));
            let mut left = BTreeSet::new();
            let mut blocks = Vec::new();
            for (&q, v) in &per_sector {
                for &r in &right {
                    left.insert(q + r);
                    blocks.push((vec![q, q + r, r], ArrayD::from_shape_vec(IxDyn(&[v.len(), 1, 1]), v.clone()).unwrap()));
                }
            }
            if blocks.is_empty() {
                return Err(Error::ZeroNormInitial);
            }
            let legs = vec![
                phys,
                Leg::unit_sectors(Dir::In, left.iter().copied()),
                Leg::unit_sectors(Dir::Out, right.iter().copied()),
            ];
            sites[l] = SymTensor::new(legs, blocks)?;
            right = left.into_iter().collect();
        }
        AsMps::new(sites, spaces)
    }

    /// Basis product state `|s_1 s_2 ... s_L>` given natural basis indices.
    pub fn basis_state(spaces: Vec<LocalSpace>, indices: &[usize]) -> Result<AsMps> {
        let amps: Vec<Vec<C64>> = spaces
            .iter()
            .zip(indices)
            .map(|(sp, &i)| {
                let mut v = vec![C64::new(0.0, 0.0); sp.dim()];
                v[i] = C64::new(1.0, 0.0);
                v
            })
            .collect();
        AsMps::product_state(spaces, &amps)
    }

    /// Random state supported on the total charges `targets`, with at most
    /// `chi` states per bond sector. Entries are drawn from a seeded ChaCha8 stream.
    pub fn random(spaces: Vec<LocalSpace>, targets: &[Charge], chi: usize, seed: u64, complex: bool) -> Result<AsMps> {
        let n = spaces.len();
        if n == 0 {
            return Err(Error::EmptyChain);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // reach_right[l]: charges attainable by sites l..n; reach_left[l]: by sites 0..l.
        let sumset = |a: &BTreeSet<Charge>, sp: &LocalSpace| -> BTreeSet<Charge> {
            a.iter().flat_map(|&x| sp.charges().iter().map(move |&q| x + q)).collect()
        };
        let mut reach_right = vec![BTreeSet::from([Charge::ZERO]); n + 1];
        for l in (0..n).rev() {
            reach_right[l] = sumset(&reach_right[l + 1], &spaces[l]);
        }
        let mut reach_left = vec![BTreeSet::from([Charge::ZERO]); n + 1];
        for l in 0..n {
            reach_left[l + 1] = sumset(&reach_left[l], &spaces[l]);
        }
        let targets: BTreeSet<Charge> = targets.iter().copied().filter(|t| reach_right[0].contains(t)).collect();
        if targets.is_empty() {
            return Err(Error::ZeroNormInitial);
        }
        // bond[l] = charges of a_l (a_l = charge carried by sites l..n).
        let mut bonds: Vec<Leg> = Vec::with_capacity(n + 1);
        for l in 0..=n {
            let allowed: Vec<(Charge, usize)> = reach_right[l]
                .iter()
                .filter(|&&c| targets.iter().any(|&t| reach_left[l].contains(&(t - c))))
                .map(|&c| (c, if l == 0 || l == n { 1 } else { chi }))
                .collect();
            bonds.push(Leg::new(Dir::Out, allowed)?);
        }
        let mut sites = Vec::with_capacity(n);
        for l in 0..n {
            let legs = vec![spaces[l].leg(Dir::Out), bonds[l].flipped(), bonds[l + 1].clone()];
            let keys = crate::symtensor::allowed_keys(&legs);
            let mut blocks = Vec::new();
            for key in keys {
                let shape: Vec<usize> = key.iter().zip(&legs).map(|(q, lg)| lg.dim_of(*q).unwrap()).collect();
                let arr = ArrayD::from_shape_simple_fn(IxDyn(&shape), || {
                    let re = rng.random::<f64>() - 0.5;
                    let im = if complex { rng.random::<f64>() - 0.5 } else { 0.0 };
                    C64::new(re, im)
                });
                blocks.push((key, arr));
            }
            sites.push(SymTensor::new(legs, blocks)?);
        }
        let mut mps = AsMps::new(sites, spaces)?;
        mps.compress_in_place(&TruncationPolicy::exact())?;
        Ok(mps)
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

    pub fn center(&self) -> Option<usize> {
        self.center
    }

    /// Total charges present on the first bond.
    pub fn a1_charges(&self) -> Vec<Charge> {
        self.sites[0].leg(1).charges().collect()
    }

    /// Largest total bond dimension.
    pub fn max_bond(&self) -> usize {
        self.sites.iter().map(|t| t.leg(2).total_dim()).max().unwrap_or(1)
    }

    pub fn bond_dims(&self) -> Vec<usize> {
        self.sites[..self.len() - 1].iter().map(|t| t.leg(2).total_dim()).collect()
    }

    /// Replace sites `l` and `l + 1` (callers keep bonds consistent).
    pub(crate) fn set_sites(&mut self, l: usize, a: SymTensor, b: SymTensor, center: Option<usize>) {
        self.sites[l] = a;
        self.sites[l + 1] = b;
        self.center = center;
        if l == 0 {
            self.normalize_boundary();
        }
    }

    pub(crate) fn set_site(&mut self, l: usize, t: SymTensor, center: Option<usize>) {
        self.sites[l] = t;
        self.center = center;
        if l == 0 {
            self.normalize_boundary();
        }
    }

    pub fn scale(&self, c: C64) -> AsMps {
        let mut out = self.clone();
        let l = self.center.unwrap_or(0);
        out.sites[l] = out.sites[l].scale(c);
        out
    }

    pub fn norm_sqr(&self) -> f64 {
        match self.center {
            Some(c) => self.sites[c].norm_sqr(),
            None => overlap(self, self).expect("same length").re,
        }
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Gauge-equivalent state with orthogonality center `center` (0-based).
    pub fn canonicalize(&self, center: usize) -> Result<AsMps> {
        assert!(center < self.len(), "center out of range");
        let mut out = self.clone();
        if out.center != Some(center) {
            chain::move_center(&mut out.sites, out.center, center)?;
            out.center = Some(center);
            out.normalize_boundary();
        }
        Ok(out)
    }

    /// Largest deviation from the left- (sites before `c`) and
    /// right-canonical (sites after `c`) identities.
    pub fn canonical_error(&self, c: usize) -> f64 {
        let mut err: f64 = 0.0;
        for l in 0..c {
            let a = &self.sites[l];
            let g = SymTensor::contract(&a.conj(), a, &[(0, 0), (1, 1)]).expect("site legs pair");
            err = err.max(identity_error(&g));
        }
        for l in c + 1..self.len() {
            let b = &self.sites[l];
            let g = SymTensor::contract(b, &b.conj(), &[(0, 0), (2, 2)]).expect("site legs pair");
            err = err.max(identity_error(&g));
        }
        err
    }

    pub fn is_canonical_at(&self, c: usize, tol: f64) -> bool {
        self.canonical_error(c) <= tol
    }

    /// Record `c` as the center without checking; callers must know it holds.
    pub(crate) fn with_center(mut self, c: usize) -> AsMps {
        self.center = Some(c);
        self
    }

    /// Truncating sweep under `policy`; the result has its center at site 0.
    /// Returns the accumulated discarded weight.
    pub fn compress(&self, policy: &TruncationPolicy) -> Result<(AsMps, f64)> {
        if self.is_zero() || self.sites.iter().any(|t| t.norm_sqr() == 0.0) {
            return Ok((AsMps::zero_like(self.spaces.clone()), 0.0));
        }
        let mut out = self.clone();
        match out.compress_in_place(policy) {
            Ok(err) => Ok((out, err)),
            // Exact cancellation between sites leaves nothing to decompose.
            Err(Error::EmptyTensor) => Ok((AsMps::zero_like(self.spaces.clone()), 0.0)),
            Err(e) => Err(e),
        }
    }

    fn compress_in_place(&mut self, policy: &TruncationPolicy) -> Result<f64> {
        let err = chain::compress(&mut self.sites, self.center, policy)?;
        self.center = Some(0);
        self.normalize_boundary();
        Ok(err)
    }

    /// Normalize to unit norm (no-op on a zero state).
    pub fn normalized(&self) -> AsMps {
        let n = self.norm();
        if n > 0.0 {
            self.scale(C64::new(1.0 / n, 0.0))
        } else {
            self.clone()
        }
    }

    /// Direct sum on every bond: amplitudes add.
    pub fn add(&self, other: &AsMps) -> Result<AsMps> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch(self.len(), other.len()));
        }
        let n = self.len();
        let mut sites = Vec::with_capacity(n);
        for l in 0..n {
            if self.spaces[l] != other.spaces[l] {
                return Err(Error::PhysicalSectorMismatch(l));
            }
            sites.push(direct_sum(&self.sites[l], &other.sites[l], &[1, 2])?);
        }
        sites[n - 1] = sites[n - 1].collapse_leg(2);
        Ok(AsMps::from_parts(sites, self.spaces.clone(), None))
    }

    /// Zip-up application: contract every site with the operator, fuse the
    /// bond pairs `(b_l, a_l)` and compress under `policy`. Returns the result
    /// and its discarded weight.
    pub fn apply_mpo(&self, op: &AsMpo, policy: &TruncationPolicy) -> Result<(AsMps, f64)> {
        let out = self.apply_mpo_exact(op)?;
        out.compress(policy)
    }

    /// Sitewise contraction without any compression; bond dimensions multiply.
    pub fn apply_mpo_exact(&self, op: &AsMpo) -> Result<AsMps> {
        if self.len() != op.len() {
            return Err(Error::LengthMismatch(self.len(), op.len()));
        }
        let n = self.len();
        let mut sites = Vec::with_capacity(n);
        let mut spaces = Vec::with_capacity(n);
        for l in 0..n {
            let w = op.site(l);
            if !w.leg(0).same_sectors(self.sites[l].leg(0)) {
                return Err(Error::PhysicalSectorMismatch(l));
            }
            // (tau, b_l, b_l1, a_l, a_l1)
            let t = SymTensor::contract(w, &self.sites[l], &[(0, 0)])?;
            let (fused, _) = t.fuse_legs(&[vec![0], vec![1, 3], vec![2, 4]])?;
            sites.push(fused);
            spaces.push(op.spaces()[l].clone());
        }
        if sites.iter().any(|t| t.is_empty()) {
            return Ok(AsMps::zero_like(spaces));
        }
        Ok(AsMps::from_parts(sites, spaces, None))
    }

    /// The zero vector represented with empty blocks and a charge-0 chain.
    fn zero_like(spaces: Vec<LocalSpace>) -> AsMps {
        let sites = spaces
            .iter()
            .map(|sp| SymTensor::zeros(vec![sp.leg(Dir::Out), Leg::trivial(Dir::In), Leg::trivial(Dir::Out)]))
            .collect();
        AsMps { sites, spaces, center: None }
    }

    pub fn is_zero(&self) -> bool {
        self.sites.iter().any(|t| t.is_empty())
    }

    /// Keep only the first-bond charges accepted by `keep`.
    pub fn restrict_a1(&self, keep: impl Fn(Charge) -> bool) -> AsMps {
        let mut out = self.clone();
        let first = out.sites[0].filter_blocks(|k| keep(k[1]));
        out.sites[0] = first.trim_leg(1);
        if out.center != Some(0) {
            out.center = None;
        }
        if out.sites[0].is_empty() {
            return AsMps::zero_like(out.spaces);
        }
        out
    }
}

/// `<psi|phi>` by a left-to-right transfer contraction. First-bond charges
/// are paired by equality.
pub fn overlap(psi: &AsMps, phi: &AsMps) -> Result<C64> {
    if psi.len() != phi.len() {
        return Err(Error::LengthMismatch(psi.len(), phi.len()));
    }
    if psi.is_zero() || phi.is_zero() {
        return Ok(C64::new(0.0, 0.0));
    }
    let lp = psi.sites[0].leg(1);
    let lf = phi.sites[0].leg(1);
    let blocks: Vec<_> = lp
        .charges()
        .filter(|q| lf.dim_of(*q).is_some())
        .map(|q| (vec![q, q], ArrayD::from_elem(IxDyn(&[1, 1]), C64::new(1.0, 0.0))))
        .collect();
    if blocks.is_empty() {
        return Ok(C64::new(0.0, 0.0));
    }
    let mut env = SymTensor::new(vec![lp.clone(), lf.flipped()], blocks)?;
    for l in 0..psi.len() {
        let t = SymTensor::contract(&env, &phi.sites[l], &[(1, 1)])?;
        let t = SymTensor::contract(&t, &psi.sites[l].conj(), &[(0, 1), (1, 0)])?;
        env = t.permute(&[1, 0]);
    }
    Ok(env.block(&[Charge::ZERO, Charge::ZERO]).map(|b| b[[0, 0]]).unwrap_or_default())
}

/// `<psi|op|phi>`. The first bond pairs bra charge `a + b` with ket charge `a`
/// and operator charge `b`.
pub fn matrix_element(psi: &AsMps, op: &AsMpo, phi: &AsMps) -> Result<C64> {
    if psi.len() != phi.len() {
        return Err(Error::LengthMismatch(psi.len(), phi.len()));
    }
    if psi.len() != op.len() {
        return Err(Error::LengthMismatch(psi.len(), op.len()));
    }
    if psi.is_zero() || phi.is_zero() {
        return Ok(C64::new(0.0, 0.0));
    }
    let mut env = left_boundary(psi.sites[0].leg(1), op.site(0).leg(2), phi.sites[0].leg(1));
    if env.is_empty() {
        return Ok(C64::new(0.0, 0.0));
    }
    for l in 0..psi.len() {
        env = grow_left(&env, psi.site(l), op.site(l), phi.site(l))?;
    }
    Ok(env.block(&[Charge::ZERO; 3]).map(|b| b[[0, 0, 0]]).unwrap_or_default())
}

pub fn expectation(psi: &AsMps, op: &AsMpo) -> Result<C64> {
    matrix_element(psi, op, psi)
}

/// Left boundary environment `(a': In, b: Out, a: Out)` with a unit block at
/// `(a + b, b, a)` for every ket charge `a` and operator charge `b` whose sum
/// is a bra charge. Pass the bra's own first-bond leg as `bra`, or `None`
/// semantics via a leg listing every sum.
pub(crate) fn left_boundary(bra: &Leg, op_b1: &Leg, ket: &Leg) -> SymTensor {
    let mut blocks = Vec::new();
    for a in ket.charges() {
        for b in op_b1.charges() {
            if let Some(da) = bra.dim_of(a + b) {
                let shape = [da, op_b1.dim_of(b).unwrap(), ket.dim_of(a).unwrap()];
                blocks.push((vec![a + b, b, a], ArrayD::from_elem(IxDyn(&shape), C64::new(1.0, 0.0))));
            }
        }
    }
    let legs = vec![bra.with_dir(Dir::In), op_b1.with_dir(Dir::Out), ket.with_dir(Dir::Out)];
    SymTensor::new(legs, blocks).expect("boundary blocks satisfy fusion")
}

/// Extend a left environment `(a': In, b: Out, a: Out)` by one site.
pub(crate) fn grow_left(env: &SymTensor, bra: &SymTensor, w: &SymTensor, ket: &SymTensor) -> Result<SymTensor> {
    // (a', b, sigma, a_r)
    let t = SymTensor::contract(env, ket, &[(2, 1)])?;
    // (a', a_r, tau, b_r)
    let t = SymTensor::contract(&t, w, &[(1, 2), (2, 0)])?;
    // (a_r, b_r, a'_r)
    let t = SymTensor::contract(&t, &bra.conj(), &[(0, 1), (2, 0)])?;
    Ok(t.permute(&[2, 1, 0]))
}

/// Extend a right environment `(a': Out, b: In, a: In)` by one site.
pub(crate) fn grow_right(env: &SymTensor, bra: &SymTensor, w: &SymTensor, ket: &SymTensor) -> Result<SymTensor> {
    // (sigma, a_l, a', b)
    let t = SymTensor::contract(ket, env, &[(2, 2)])?;
    // (a_l, a', tau, b_l)
    let t = SymTensor::contract(&t, w, &[(0, 0), (3, 3)])?;
    // (a_l, b_l, a'_l)
    let t = SymTensor::contract(&t, &bra.conj(), &[(1, 2), (2, 0)])?;
    Ok(t.permute(&[2, 1, 0]))
}

/// Right boundary environment: the single unit block at charge 0.
pub(crate) fn right_boundary() -> SymTensor {
    SymTensor::new(
        vec![Leg::trivial(Dir::Out), Leg::trivial(Dir::In), Leg::trivial(Dir::In)],
        vec![(vec![Charge::ZERO; 3], ArrayD::from_elem(IxDyn(&[1, 1, 1]), C64::new(1.0, 0.0)))],
    )
    .expect("trivial block")
}

/// Max deviation of a matrix-like `(In, Out)` tensor from the identity over its sectors.
fn identity_error(g: &SymTensor) -> f64 {
    let mut err: f64 = 0.0;
    for &(q, d) in g.leg(0).sectors() {
        let blk = g.block(&[q, q]);
        for i in 0..d {
            for j in 0..d {
                let v = blk.map(|b| b[[i, j]]).unwrap_or_default();
                let target = if i == j { 1.0 } else { 0.0 };
                err = err.max((v - C64::new(target, 0.0)).norm());
            }
        }
    }
    err
}
