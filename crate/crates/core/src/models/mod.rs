//! Operator builders for the XYZ chain, the Bose-Hubbard chain and its
//! vectorized Lindbladian, plus generic sums of local product terms.

mod gates;
mod lindblad;
#[cfg(test)]
mod tests;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netops::{operator_site, AsMpo};
use crate::oracle::ops;
use crate::space::LocalSpace;
use crate::symtensor::{Charge, SymTensor, TruncationPolicy};
use crate::{linalg, C64};

pub use gates::{exp_asymmetric_mpo, trotter_gates, Gate, GateSchedule};
pub use lindblad::{density_from_pure, density_observable, lindblad_mpo, trace_state, LindbladModel};

/// Coupling constants of the supported models. Unused fields are ignored by
/// a given builder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    pub l: usize,
    pub j_xy: f64,
    pub gamma: f64,
    pub delta: f64,
    pub h: f64,
    pub j: f64,
    pub u: f64,
    pub lambda1: f64,
    #[serde(rename = "lambdaL")]
    pub lambda_l: f64,
    pub nbar1: f64,
    #[serde(rename = "nbarL")]
    pub nbar_l: f64,
    pub d: usize,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            l: 2,
            j_xy: 1.0,
            gamma: 0.0,
            delta: 0.0,
            h: 0.0,
            j: 1.0,
            u: 0.0,
            lambda1: 0.0,
            lambda_l: 0.0,
            nbar1: 0.0,
            nbar_l: 0.0,
            d: 2,
        }
    }
}

impl ModelParams {
    /// Chains of length 1 are accepted for single-site checks.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParams(m.into()));
        let reals = [self.j_xy, self.gamma, self.delta, self.h, self.j, self.u, self.lambda1, self.lambda_l, self.nbar1, self.nbar_l];
        if reals.iter().any(|x| !x.is_finite()) {
            return bad("couplings must be finite");
        }
        if self.l == 0 {
            return bad("l must be at least 1");
        }
        if self.d < 2 {
            return bad("d must be at least 2");
        }
        if self.gamma < 0.0 {
            return bad("gamma must be non-negative");
        }
        if self.lambda1 < 0.0 || self.lambda_l < 0.0 {
            return bad("dissipation rates must be non-negative");
        }
        if self.nbar1 < 0.0 || self.nbar_l < 0.0 {
            return bad("bath occupations must be non-negative");
        }
        Ok(())
    }
}

/// `coefficient * prod_k op_k` with `op_k` acting on site `k`; operators are
/// natural-basis matrices (rows = output state).
#[derive(Clone, Debug, PartialEq)]
pub struct LocalTerm {
    pub coefficient: C64,
    pub factors: Vec<(usize, Array2<C64>)>,
}

impl LocalTerm {
    pub fn new(coefficient: C64, factors: Vec<(usize, Array2<C64>)>) -> LocalTerm {
        LocalTerm { coefficient, factors }
    }

    pub fn single(coefficient: C64, site: usize, op: Array2<C64>) -> LocalTerm {
        LocalTerm::new(coefficient, vec![(site, op)])
    }

    pub fn pair(coefficient: C64, s1: usize, op1: Array2<C64>, s2: usize, op2: Array2<C64>) -> LocalTerm {
        LocalTerm::new(coefficient, vec![(s1, op1), (s2, op2)])
    }

    pub fn sites(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.0).collect()
    }

    pub fn scaled(&self, c: C64) -> LocalTerm {
        LocalTerm { coefficient: self.coefficient * c, factors: self.factors.clone() }
    }

    /// Check site ranges, ordering and operator shapes.
    pub fn check_sites(&self, spaces: &[LocalSpace]) -> Result<()> {
        let len = spaces.len();
        if self.factors.is_empty() {
            return Err(Error::InvalidParams("term without factors".into()));
        }
        for (k, (site, op)) in self.factors.iter().enumerate() {
            if *site >= len {
                return Err(Error::SiteOutOfRange { site: *site, len });
            }
            if k > 0 && self.factors[k - 1].0 >= *site {
                return Err(Error::InvalidParams("term sites must be strictly increasing".into()));
            }
            spaces[*site].check_operator(op)?;
        }
        Ok(())
    }

    /// Check the term and return its total charge shift; every factor must
    /// have a definite shift.
    pub fn check(&self, spaces: &[LocalSpace]) -> Result<Charge> {
        self.check_sites(spaces)?;
        let mut shift = Charge::ZERO;
        for (site, op) in &self.factors {
            shift += spaces[*site].shift_of(op, 0.0).ok_or(Error::IndefiniteShift(*site))?;
        }
        Ok(shift)
    }

    /// The factors as operator sites with one-dimensional bonds; the left
    /// bond carries the factor's shift and the right bond charge 0.
    pub fn factor_tensors(&self, spaces: &[LocalSpace]) -> Result<Vec<(usize, SymTensor)>> {
        self.check(spaces)?;
        self.factors
            .iter()
            .map(|(s, op)| {
                let shift = spaces[*s].shift_of(op, 0.0).ok_or(Error::IndefiniteShift(*s))?;
                Ok((*s, operator_site(&spaces[*s], op, shift, Charge::ZERO)?))
            })
            .collect()
    }

    /// Bond-dimension-1 product operator with identities off the factor sites.
    pub fn product_mpo(&self, spaces: &[LocalSpace]) -> Result<AsMpo> {
        self.check(spaces)?;
        let mut ops: Vec<Array2<C64>> = spaces.iter().map(|sp| linalg::identity(sp.dim())).collect();
        for (s, op) in &self.factors {
            ops[*s] = op.clone();
        }
        ops[self.factors[0].0] = ops[self.factors[0].0].mapv(|x| x * self.coefficient);
        AsMpo::product(spaces.to_vec(), &ops)
    }

    /// Dense matrix of the term on the full chain.
    pub fn dense(&self, spaces: &[LocalSpace]) -> Array2<C64> {
        let dims: Vec<usize> = spaces.iter().map(LocalSpace::dim).collect();
        let refs: Vec<(usize, &Array2<C64>)> = self.factors.iter().map(|(s, o)| (*s, o)).collect();
        crate::oracle::embed(&dims, &refs).mapv(|x| x * self.coefficient)
    }
}

/// Sum of local terms as an as-MPO: one product MPO per term, summed by
/// direct sums and compressed pairwise under `policy`.
pub fn mpo_from_terms(spaces: &[LocalSpace], terms: &[LocalTerm], policy: &TruncationPolicy) -> Result<AsMpo> {
    if spaces.is_empty() {
        return Err(Error::EmptyChain);
    }
    if terms.is_empty() {
        return Err(Error::InvalidParams("at least one term is required".into()));
    }
    let mut level: Vec<AsMpo> = terms.par_iter().map(|t| t.product_mpo(spaces)).collect::<Result<_>>()?;
    while level.len() > 1 {
        level = level
            .par_chunks(2)
            .map(|pair| match pair {
                [a, b] => a.add(b)?.compress(policy).map(|r| r.0),
                [a] => Ok(a.clone()),
                _ => unreachable!(),
            })
            .collect::<Result<_>>()?;
    }
    Ok(level.pop().expect("one operator left"))
}

pub fn spin_spaces(l: usize) -> Vec<LocalSpace> {
    vec![LocalSpace::spin_half(); l]
}

pub fn boson_spaces(l: usize, d: usize) -> Vec<LocalSpace> {
    vec![LocalSpace::boson(d); l]
}

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn push_nonzero(out: &mut Vec<LocalTerm>, t: LocalTerm) {
    if t.coefficient != re(0.0) && t.factors.iter().all(|(_, op)| op.iter().any(|x| *x != re(0.0))) {
        out.push(t);
    }
}

/// XYZ chain written with raising and lowering operators: per bond
/// `J_XY [2 s+ s- + 2 s- s+ + 2 gamma (s+ s+ + s- s-) + delta sz sz]`, plus
/// `h sz` on every site. Zero couplings produce no term.
pub fn xyz_terms(p: &ModelParams) -> Vec<LocalTerm> {
    let (sp, sm, sz) = (ops::sigma_plus(), ops::sigma_minus(), ops::sigma_z());
    let mut out = Vec::new();
    for j in 0..p.l.saturating_sub(1) {
        let k = j + 1;
        push_nonzero(&mut out, LocalTerm::pair(re(2.0 * p.j_xy), j, sp.clone(), k, sm.clone()));
        push_nonzero(&mut out, LocalTerm::pair(re(2.0 * p.j_xy), j, sm.clone(), k, sp.clone()));
        push_nonzero(&mut out, LocalTerm::pair(re(2.0 * p.j_xy * p.gamma), j, sp.clone(), k, sp.clone()));
        push_nonzero(&mut out, LocalTerm::pair(re(2.0 * p.j_xy * p.gamma), j, sm.clone(), k, sm.clone()));
        push_nonzero(&mut out, LocalTerm::pair(re(p.j_xy * p.delta), j, sz.clone(), k, sz.clone()));
    }
    for j in 0..p.l {
        push_nonzero(&mut out, LocalTerm::single(re(p.h), j, sz.clone()));
    }
    out
}

fn terms_or_zero(spaces: Vec<LocalSpace>, terms: &[LocalTerm]) -> Result<AsMpo> {
    if terms.is_empty() {
        return Ok(AsMpo::zero(spaces));
    }
    mpo_from_terms(&spaces, terms, &TruncationPolicy::exact())
}

pub fn mpo_xyz(p: &ModelParams) -> Result<AsMpo> {
    p.validate()?;
    terms_or_zero(spin_spaces(p.l), &xyz_terms(p))
}

/// `exp(i pi sum_l sz_l)` as a bond-dimension-1 product.
pub fn mpo_parity(l: usize) -> Result<AsMpo> {
    if l == 0 {
        return Err(Error::EmptyChain);
    }
    let site = linalg::expm(&ops::sigma_z().mapv(|x| x * C64::new(0.0, std::f64::consts::PI)));
    let site = site.mapv(|x| if x.norm() < 1e-15 { re(0.0) } else { x });
    AsMpo::product(spin_spaces(l), &vec![site; l])
}

/// `-J sum_l (a_l a^dag_{l+1} + h.c.) + U/2 sum_l n_l (n_l - 1)`.
pub fn bose_hubbard_terms(p: &ModelParams) -> Vec<LocalTerm> {
    let a = ops::boson_a(p.d);
    let ad = linalg::dagger(&a);
    let n = ops::boson_n(p.d);
    let int = n.dot(&(&n - &linalg::identity(p.d)));
    let mut out = Vec::new();
    for s in 0..p.l.saturating_sub(1) {
        push_nonzero(&mut out, LocalTerm::pair(re(-p.j), s, a.clone(), s + 1, ad.clone()));
        push_nonzero(&mut out, LocalTerm::pair(re(-p.j), s, ad.clone(), s + 1, a.clone()));
    }
    for s in 0..p.l {
        push_nonzero(&mut out, LocalTerm::single(re(p.u / 2.0), s, int.clone()));
    }
    out
}

pub fn mpo_bose_hubbard(p: &ModelParams) -> Result<AsMpo> {
    p.validate()?;
    terms_or_zero(boson_spaces(p.l, p.d), &bose_hubbard_terms(p))
}

/// `op` on `site`, identity elsewhere.
pub fn local_operator(spaces: &[LocalSpace], site: usize, op: &Array2<C64>) -> Result<AsMpo> {
    LocalTerm::single(re(1.0), site, op.clone()).product_mpo(spaces)
}

/// Split terms into charge-conserving and charge-shifting lists.
pub fn split_by_shift(spaces: &[LocalSpace], terms: &[LocalTerm]) -> Result<(Vec<LocalTerm>, Vec<LocalTerm>)> {
    let mut sym = Vec::new();
    let mut asym = Vec::new();
    for t in terms {
        if t.check(spaces)? == Charge::ZERO {
            sym.push(t.clone());
        } else {
            asym.push(t.clone());
        }
    }
    Ok((sym, asym))
}

/// Multiply every term by `-i`, turning Hamiltonian terms into generator terms.
pub fn unitary_generator(terms: &[LocalTerm]) -> Vec<LocalTerm> {
    terms.iter().map(|t| t.scaled(C64::new(0.0, -1.0))).collect()
}
