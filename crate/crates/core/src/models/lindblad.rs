use std::collections::BTreeMap;

use ndarray::{Array2, ArrayD, IxDyn};

use super::{bose_hubbard_terms, mpo_from_terms, LocalTerm, ModelParams};
use crate::error::Result;
use crate::netops::{AsMpo, AsMps};
use crate::oracle::ops;
use crate::space::LocalSpace;
use crate::symtensor::{Charge, Dir, FuseGroup, SymTensor, TruncationPolicy};
use crate::{linalg, C64};

/// `A` acting on the ket index of a vectorized site (`n` in `n + d*m`).
fn ket(a: &Array2<C64>) -> Array2<C64> {
    linalg::kron(&linalg::identity(a.nrows()), a)
}

/// Right multiplication `rho -> rho A` on a vectorized site: `A^T` on the bra index.
fn bra(a: &Array2<C64>) -> Array2<C64> {
    linalg::kron(&a.t().to_owned(), &linalg::identity(a.nrows()))
}

/// Vectorized Lindbladian as generator term lists on `|n><m| -> n + d*m`
/// sites with charge `n + m`. `symmetric` and `asymmetric` split the terms by
/// whether they conserve the charge; `hamiltonian` and `dissipator` split the
/// same terms by origin.
#[derive(Clone, Debug)]
pub struct LindbladModel {
    pub base: Vec<LocalSpace>,
    pub spaces: Vec<LocalSpace>,
    pub symmetric: Vec<LocalTerm>,
    pub asymmetric: Vec<LocalTerm>,
    pub hamiltonian: Vec<LocalTerm>,
    pub dissipator: Vec<LocalTerm>,
}

impl LindbladModel {
    /// `L rho = -i[H, rho] + sum_k r_k (2 L_k rho L_k^dag - {L_k^dag L_k, rho})`
    /// with each jump given as `(rate, site, L_k)`.
    pub fn new(base: Vec<LocalSpace>, hamiltonian: &[LocalTerm], jumps: &[(f64, usize, Array2<C64>)]) -> Result<LindbladModel> {
        let spaces: Vec<LocalSpace> = base.iter().map(LocalSpace::vectorized).collect();
        let mut unitary = Vec::new();
        for t in hamiltonian {
            t.check(&base)?;
            let kets = t.factors.iter().map(|(s, a)| (*s, ket(a))).collect();
            let bras = t.factors.iter().map(|(s, a)| (*s, bra(a))).collect();
            unitary.push(LocalTerm::new(t.coefficient * C64::new(0.0, -1.0), kets));
            unitary.push(LocalTerm::new(t.coefficient * C64::new(0.0, 1.0), bras));
        }
        let mut dissipator = Vec::new();
        for (rate, site, l) in jumps {
            if *rate == 0.0 {
                continue;
            }
            LocalTerm::single(C64::new(1.0, 0.0), *site, l.clone()).check(&base)?;
            let ld = linalg::dagger(l);
            let ldl = ld.dot(l);
            let r = C64::new(*rate, 0.0);
            dissipator.push(LocalTerm::single(r * 2.0, *site, ket(l).dot(&bra(&ld))));
            dissipator.push(LocalTerm::single(-r, *site, ket(&ldl)));
            dissipator.push(LocalTerm::single(-r, *site, bra(&ldl)));
        }
        let all: Vec<LocalTerm> = unitary.iter().chain(&dissipator).cloned().collect();
        let (symmetric, asymmetric) = super::split_by_shift(&spaces, &all)?;
        Ok(LindbladModel { base, spaces, symmetric, asymmetric, hamiltonian: unitary, dissipator })
    }

    /// Terms for the hybrid scheme: the charge-conserving Hamiltonian terms
    /// go to the gates; every dissipator term (charge-shifting jumps and
    /// their conserving anticommutators, all single-site) and any
    /// charge-shifting Hamiltonian term go to the local exponential. Each
    /// local exponential is then a complete single-site Lindbladian and
    /// preserves the trace exactly.
    pub fn hybrid_parts(&self) -> Result<(Vec<LocalTerm>, Vec<LocalTerm>)> {
        let (sym, shifting) = super::split_by_shift(&self.spaces, &self.hamiltonian)?;
        let local = self.dissipator.iter().chain(&shifting).cloned().collect();
        Ok((sym, local))
    }

    /// Bose-Hubbard chain with thermal baths on the first and last site; a
    /// single-site chain only feels the first bath.
    pub fn bose_hubbard(p: &ModelParams) -> Result<LindbladModel> {
        p.validate()?;
        let a = ops::boson_a(p.d);
        let ad = linalg::dagger(&a);
        let mut jumps = vec![(p.lambda1 * (p.nbar1 + 1.0), 0, a.clone()), (p.lambda1 * p.nbar1, 0, ad.clone())];
        if p.l > 1 {
            jumps.push((p.lambda_l * (p.nbar_l + 1.0), p.l - 1, a));
            jumps.push((p.lambda_l * p.nbar_l, p.l - 1, ad));
        }
        LindbladModel::new(super::boson_spaces(p.l, p.d), &bose_hubbard_terms(p), &jumps)
    }

    pub fn symmetric_mpo(&self, policy: &TruncationPolicy) -> Result<AsMpo> {
        mpo_or_zero(&self.spaces, &self.symmetric, policy)
    }

    pub fn asymmetric_mpo(&self, policy: &TruncationPolicy) -> Result<AsMpo> {
        mpo_or_zero(&self.spaces, &self.asymmetric, policy)
    }

    /// The full Lindbladian as one as-MPO.
    pub fn generator_mpo(&self, policy: &TruncationPolicy) -> Result<AsMpo> {
        let all: Vec<LocalTerm> = self.symmetric.iter().chain(&self.asymmetric).cloned().collect();
        mpo_or_zero(&self.spaces, &all, policy)
    }
}

fn mpo_or_zero(spaces: &[LocalSpace], terms: &[LocalTerm], policy: &TruncationPolicy) -> Result<AsMpo> {
    if terms.is_empty() {
        return Ok(AsMpo::zero(spaces.to_vec()));
    }
    mpo_from_terms(spaces, terms, policy)
}

/// Symmetric and asymmetric parts of the Bose-Hubbard Lindbladian.
pub fn lindblad_mpo(p: &ModelParams) -> Result<(AsMpo, AsMpo)> {
    let m = LindbladModel::bose_hubbard(p)?;
    let policy = TruncationPolicy::exact();
    Ok((m.symmetric_mpo(&policy)?, m.asymmetric_mpo(&policy)?))
}

/// `rho -> A rho` with `A` on `site` of the base chain; `<1|A rho>` is `tr(A rho)`.
pub fn density_observable(base: &[LocalSpace], site: usize, op: &Array2<C64>) -> Result<AsMpo> {
    let spaces: Vec<LocalSpace> = base.iter().map(LocalSpace::vectorized).collect();
    super::local_operator(&spaces, site, &ket(op))
}

/// The vectorized identity `sum_n |n><n|` on every site; its overlap with a
/// vectorized density operator is the trace.
pub fn trace_state(base: &[LocalSpace]) -> Result<AsMps> {
    let spaces: Vec<LocalSpace> = base.iter().map(LocalSpace::vectorized).collect();
    let amps: Vec<Vec<C64>> = base
        .iter()
        .map(|sp| {
            let d = sp.dim();
            let mut v = vec![C64::new(0.0, 0.0); d * d];
            for n in 0..d {
                v[n + d * n] = C64::new(1.0, 0.0);
            }
            v
        })
        .collect();
    AsMps::product_state(spaces, &amps)
}

/// `|psi><psi|` as a vectorized as-MPS; bonds are the products of the ket
/// and bra bonds with added charges.
pub fn density_from_pure(psi: &AsMps) -> Result<AsMps> {
    let base = psi.spaces();
    let n = psi.len();
    let mut sites = Vec::with_capacity(n);
    for l in 0..n {
        let sp = &base[l];
        let d = sp.dim();
        let vsp = LocalSpace::vectorized(sp);
        let mut natural: BTreeMap<(Charge, usize), usize> = BTreeMap::new();
        for i in 0..d {
            natural.insert(sp.locate(i), i);
        }
        let t = psi.site(l);
        let left = FuseGroup::new(vec![1, 1], vec![t.leg(1).clone(), t.leg(1).clone()], Dir::In);
        let right = FuseGroup::new(vec![2, 2], vec![t.leg(2).clone(), t.leg(2).clone()], Dir::Out);
        let legs = vec![vsp.leg(Dir::Out), left.fused_leg().clone(), right.fused_leg().clone()];
        let mut blocks: BTreeMap<Vec<Charge>, ArrayD<C64>> = BTreeMap::new();
        for (k1, b1) in t.blocks() {
            for (k2, b2) in t.blocks() {
                let (lq, loff) = left.locate(&[k1[1], k2[1]]).expect("left pair");
                let (rq, roff) = right.locate(&[k1[2], k2[2]]).expect("right pair");
                let (da2, dc2) = (b2.shape()[1], b2.shape()[2]);
                for i in 0..b1.shape()[0] {
                    for j in 0..b2.shape()[0] {
                        let v = natural[&(k1[0], i)] + d * natural[&(k2[0], j)];
                        let (vq, voff) = vsp.locate(v);
                        let key = vec![vq, lq, rq];
                        let blk = blocks.entry(key.clone()).or_insert_with(|| {
                            let shape: Vec<usize> = key.iter().zip(&legs).map(|(q, lg)| lg.dim_of(*q).unwrap()).collect();
                            ArrayD::zeros(IxDyn(&shape))
                        });
                        for ia in 0..b1.shape()[1] {
                            for ib in 0..da2 {
                                for ic in 0..b1.shape()[2] {
                                    for jc in 0..dc2 {
                                        blk[[voff, loff + ia * da2 + ib, roff + ic * dc2 + jc]] = b1[[i, ia, ic]] * b2[[j, ib, jc]].conj();
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        sites.push(SymTensor::new(legs, blocks)?);
    }
    AsMps::new(sites, base.iter().map(LocalSpace::vectorized).collect())
}
