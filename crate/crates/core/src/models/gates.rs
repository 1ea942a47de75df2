use std::collections::{BTreeMap, BTreeSet};

use ndarray::{Array2, ArrayD, IxDyn};

use super::LocalTerm;
use crate::error::{Error, Result};
use crate::netops::AsMpo;
use crate::space::LocalSpace;
use crate::symtensor::{Charge, Dir, Leg, SymTensor};
use crate::{linalg, C64};

/// A charge-conserving propagator on one site (legs `(sigma: In, tau: Out)`)
/// or on the bond `(site, site + 1)` (legs `(sigma_l: In, sigma_{l+1}: In,
/// tau_l: Out, tau_{l+1}: Out)`).
#[derive(Clone, Debug)]
pub struct Gate {
    pub site: usize,
    pub span: usize,
    pub tensor: SymTensor,
}

/// Layers of gates on disjoint sites, applied in order.
#[derive(Clone, Debug)]
pub struct GateSchedule {
    pub dt: f64,
    pub order: usize,
    pub layers: Vec<Vec<Gate>>,
}

/// `exp(g)` computed sector by sector of the charges in `charges`; `g` must
/// not couple different charges.
fn sector_expm(g: &Array2<C64>, charges: &[Charge]) -> Array2<C64> {
    let mut groups: BTreeMap<Charge, Vec<usize>> = BTreeMap::new();
    for (i, &q) in charges.iter().enumerate() {
        groups.entry(q).or_default().push(i);
    }
    let mut out = Array2::zeros(g.raw_dim());
    for idx in groups.values() {
        let sub = Array2::from_shape_fn((idx.len(), idx.len()), |(r, c)| g[[idx[r], idx[c]]]);
        let e = linalg::expm(&sub);
        for (r, &ir) in idx.iter().enumerate() {
            for (c, &ic) in idx.iter().enumerate() {
                out[[ir, ic]] = e[[r, c]];
            }
        }
    }
    out
}

fn pair_charges(a: &LocalSpace, b: &LocalSpace) -> Vec<Charge> {
    a.charges().iter().flat_map(|&x| b.charges().iter().map(move |&y| x + y)).collect()
}

/// Re-block a charge-conserving two-site matrix (natural basis, site `a`
/// slow) into a gate tensor.
pub(crate) fn two_site_tensor(a: &LocalSpace, b: &LocalSpace, u: &Array2<C64>) -> Result<SymTensor> {
    let db = b.dim();
    let legs = vec![a.leg(Dir::In), b.leg(Dir::In), a.leg(Dir::Out), b.leg(Dir::Out)];
    let mut blocks: BTreeMap<Vec<Charge>, ArrayD<C64>> = BTreeMap::new();
    for ((r, c), v) in u.indexed_iter() {
        if *v == C64::new(0.0, 0.0) {
            continue;
        }
        let (qo1, o1) = a.locate(r / db);
        let (qo2, o2) = b.locate(r % db);
        let (qi1, i1) = a.locate(c / db);
        let (qi2, i2) = b.locate(c % db);
        let key = vec![qi1, qi2, qo1, qo2];
        let blk = blocks.entry(key.clone()).or_insert_with(|| {
            let shape: Vec<usize> = key.iter().zip(&legs).map(|(q, l)| l.dim_of(*q).unwrap()).collect();
            ArrayD::zeros(IxDyn(&shape))
        });
        blk[[i1, i2, o1, o2]] = *v;
    }
    SymTensor::new(legs, blocks)
}

fn one_site_tensor(a: &LocalSpace, u: &Array2<C64>) -> Result<SymTensor> {
    let legs = vec![a.leg(Dir::In), a.leg(Dir::Out)];
    let mut blocks: BTreeMap<Vec<Charge>, ArrayD<C64>> = BTreeMap::new();
    for ((r, c), v) in u.indexed_iter() {
        if *v == C64::new(0.0, 0.0) {
            continue;
        }
        let (qo, o) = a.locate(r);
        let (qi, i) = a.locate(c);
        let key = vec![qi, qo];
        let blk = blocks.entry(key.clone()).or_insert_with(|| {
            let shape: Vec<usize> = key.iter().zip(&legs).map(|(q, l)| l.dim_of(*q).unwrap()).collect();
            ArrayD::zeros(IxDyn(&shape))
        });
        blk[[i, o]] = *v;
    }
    SymTensor::new(legs, blocks)
}

/// Gates `exp(g_b * tau)` for charge-conserving generator terms (already
/// multiplied by `-i` for unitary dynamics). Single-site terms are folded
/// into the bond to their right, or the last bond for the last site.
/// Order 1 is `even(dt) odd(dt)`; order 2 is `even(dt/2) odd(dt) even(dt/2)`.
pub fn trotter_gates(spaces: &[LocalSpace], terms: &[LocalTerm], dt: f64, order: usize) -> Result<GateSchedule> {
    let n = spaces.len();
    if n == 0 {
        return Err(Error::EmptyChain);
    }
    if order != 1 && order != 2 {
        return Err(Error::InvalidParams(format!("Trotter order must be 1 or 2, got {order}")));
    }
    for (k, t) in terms.iter().enumerate() {
        if t.check(spaces)? != Charge::ZERO {
            return Err(Error::NonConservingTerm(k));
        }
        let s = t.sites();
        if s.len() > 2 || (s.len() == 2 && s[1] != s[0] + 1) {
            return Err(Error::InvalidParams(format!("term {k} is not a nearest-neighbour term")));
        }
    }
    if n == 1 {
        let d = spaces[0].dim();
        let mut g: Array2<C64> = Array2::zeros((d, d));
        for t in terms {
            g = g + t.factors[0].1.mapv(|x| x * t.coefficient);
        }
        let u = sector_expm(&g.mapv(|x| x * dt), spaces[0].charges());
        let gate = Gate { site: 0, span: 1, tensor: one_site_tensor(&spaces[0], &u)? };
        return Ok(GateSchedule { dt, order, layers: vec![vec![gate]] });
    }

    let mut bonds: Vec<Array2<C64>> = (0..n - 1)
        .map(|b| {
            let dd = spaces[b].dim() * spaces[b + 1].dim();
            Array2::zeros((dd, dd))
        })
        .collect();
    for t in terms {
        let (s0, op0) = &t.factors[0];
        let (b, m) = match t.factors.get(1) {
            Some((_, op1)) => (*s0, linalg::kron(op0, op1)),
            None if *s0 + 1 < n => (*s0, linalg::kron(op0, &linalg::identity(spaces[*s0 + 1].dim()))),
            None => (*s0 - 1, linalg::kron(&linalg::identity(spaces[*s0 - 1].dim()), op0)),
        };
        bonds[b] = &bonds[b] + &m.mapv(|x| x * t.coefficient);
    }
    let layer = |parity: usize, tau: f64| -> Result<Vec<Gate>> {
        (parity..n - 1)
            .step_by(2)
            .map(|b| {
                let charges = pair_charges(&spaces[b], &spaces[b + 1]);
                let u = sector_expm(&bonds[b].mapv(|x| x * tau), &charges);
                Ok(Gate { site: b, span: 2, tensor: two_site_tensor(&spaces[b], &spaces[b + 1], &u)? })
            })
            .collect()
    };
    let mut layers = if order == 1 {
        vec![layer(0, dt)?, layer(1, dt)?]
    } else {
        vec![layer(0, dt / 2.0)?, layer(1, dt)?, layer(0, dt / 2.0)?]
    };
    layers.retain(|l| !l.is_empty());
    Ok(GateSchedule { dt, order, layers })
}

/// `exp(G_a * dt)` for single-site generator terms `G_a`, built from exact
/// local exponentials. Each local factor is split into pieces of definite
/// shift; the bonds carry the accumulated shifts with dimension 1 per charge.
pub fn exp_asymmetric_mpo(spaces: &[LocalSpace], terms: &[LocalTerm], dt: f64) -> Result<AsMpo> {
    let n = spaces.len();
    if n == 0 {
        return Err(Error::EmptyChain);
    }
    let mut gens: Vec<Option<Array2<C64>>> = vec![None; n];
    for (k, t) in terms.iter().enumerate() {
        t.check_sites(spaces)?;
        if t.factors.len() != 1 {
            return Err(Error::NonLocalAsymmetricTerm(k));
        }
        let (s, op) = &t.factors[0];
        let add = op.mapv(|x| x * t.coefficient);
        gens[*s] = Some(match gens[*s].take() {
            Some(g) => g + add,
            None => add,
        });
    }
    let mut sites = vec![SymTensor::zeros(vec![]); n];
    let mut right: BTreeSet<Charge> = BTreeSet::from([Charge::ZERO]);
    for l in (0..n).rev() {
        let sp = &spaces[l];
        let e = match &gens[l] {
            Some(g) => linalg::expm(&g.mapv(|x| x * dt)),
            None => linalg::identity(sp.dim()),
        };
        let scale = e.iter().map(|x| x.norm()).fold(0.0, f64::max);
        let parts = sp.shift_components(&e, 1e-15 * scale);
        let left: BTreeSet<Charge> = parts.iter().flat_map(|(k, _)| right.iter().map(move |&r| r + *k)).collect();
        let legs = vec![
            sp.leg(Dir::In),
            sp.leg(Dir::Out),
            Leg::unit_sectors(Dir::In, left.iter().copied()),
            Leg::unit_sectors(Dir::Out, right.iter().copied()),
        ];
        let mut blocks: BTreeMap<Vec<Charge>, ArrayD<C64>> = BTreeMap::new();
        for (k, a) in &parts {
            for &r in &right {
                for ((row, col), v) in a.indexed_iter() {
                    if *v == C64::new(0.0, 0.0) {
                        continue;
                    }
                    let (qr, or) = sp.locate(row);
                    let (qc, oc) = sp.locate(col);
                    let key = vec![qc, qr, r + *k, r];
                    let blk = blocks.entry(key.clone()).or_insert_with(|| {
                        let shape = [legs[0].dim_of(qc).unwrap(), legs[1].dim_of(qr).unwrap(), 1, 1];
                        ArrayD::zeros(IxDyn(&shape))
                    });
                    blk[[oc, or, 0, 0]] = *v;
                }
            }
        }
        sites[l] = SymTensor::new(legs, blocks)?;
        right = left;
    }
    AsMpo::new(sites, spaces.to_vec())
}
