//! Two-site variational ground-state search over as-MPS.
//!
//! The left boundary environment pairs every state charge `a` with every
//! operator charge `b` of the first bonds. On each visit to the first bond
//! the bra side is widened to the sums `a + b`, so the eigensolver can move
//! weight into sectors the operator reaches. With `b_1 = {0}` nothing is
//! widened and a U(1) symmetry is preserved exactly.

mod lanczos;

pub use lanczos::{lowest_eigenpair, LanczosResult};

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netops::{grow_left, grow_right, left_boundary, right_boundary, AsMpo, AsMps};
use crate::symtensor::{BlockLayout, Charge, Dir, Leg, SymTensor, TruncationPolicy};
use crate::{linalg, oracle, C64};

/// Environment tensor. Left: `(a': In, b: Out, a: Out)`; right:
/// `(a': Out, b: In, a: In)`. `a'` is the bra side.
pub type EnvTensor = SymTensor;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DmrgOptions {
    pub max_bond: usize,
    pub svd_tolerance: f64,
    pub max_sweeps: usize,
    pub energy_tolerance: f64,
    pub lanczos_max_iter: usize,
    pub lanczos_tol: f64,
}

impl Default for DmrgOptions {
    fn default() -> Self {
        DmrgOptions {
            max_bond: 64,
            svd_tolerance: 1e-12,
            max_sweeps: 20,
            energy_tolerance: 1e-10,
            lanczos_max_iter: 200,
            lanczos_tol: 1e-10,
        }
    }
}

impl DmrgOptions {
    pub fn validate(&self) -> Result<()> {
        let ok = self.max_bond > 0
            && self.svd_tolerance >= 0.0
            && self.max_sweeps > 0
            && self.energy_tolerance > 0.0
            && self.lanczos_max_iter > 0
            && self.lanczos_tol > 0.0;
        if !ok {
            return Err(Error::InvalidParams(format!("DMRG options must be positive: {self:?}")));
        }
        Ok(())
    }

    pub fn policy(&self) -> TruncationPolicy {
        TruncationPolicy::new(self.max_bond, self.svd_tolerance)
    }
}

/// Per-sweep progress record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub sweep: usize,
    pub energy: f64,
    pub max_bond: usize,
    pub discarded_weight: f64,
}

#[derive(Clone, Debug)]
pub struct DmrgResult {
    pub energy: f64,
    /// Normalized, with its orthogonality center at site 0.
    pub state: AsMps,
    pub history: Vec<SweepRecord>,
    /// False when `max_sweeps` ran out before the energy settled or an
    /// eigensolve missed its residual tolerance on the final sweep.
    pub converged: bool,
}

impl DmrgResult {
    pub fn energies(&self) -> Vec<f64> {
        self.history.iter().map(|r| r.energy).collect()
    }
}

/// `L_1`: a unit block at `(a_1 + b_1, b_1, a_1)` for every first-bond
/// charge `a_1` of `psi` and `b_1` of `op`.
pub fn init_left_boundary(psi: &AsMps, op: &AsMpo) -> Result<EnvTensor> {
    if psi.len() != op.len() {
        return Err(Error::LengthMismatch(psi.len(), op.len()));
    }
    let ket = psi.site(0).leg(1);
    let bra = widened_leg(ket, op.site(0).leg(2));
    Ok(left_boundary(&bra, op.site(0).leg(2), ket))
}

/// The union `S ∪ (S + B)` of state charges `S` and their shifts by `B`,
/// as a unit-sector incoming leg.
fn widened_leg(ket: &Leg, op_b1: &Leg) -> Leg {
    let mut set: BTreeSet<Charge> = ket.charges().collect();
    for a in ket.charges() {
        for b in op_b1.charges() {
            set.insert(a + b);
        }
    }
    Leg::unit_sectors(Dir::In, set)
}

/// Extend an environment by one site. `bra` is conjugated internally.
pub fn grow_env(env: &EnvTensor, bra: &SymTensor, w: &SymTensor, ket: &SymTensor, side: Side) -> Result<EnvTensor> {
    match side {
        Side::Left => grow_left(env, bra, w, ket),
        Side::Right => grow_right(env, bra, w, ket),
    }
}

/// Matrix-free action of the two-site effective operator on `x` with legs
/// `(sigma_l: Out, a_l: In, sigma_{l+1}: Out, a_{l+2}: Out)`.
pub fn effective_apply(env_l: &EnvTensor, w_l: &SymTensor, w_l1: &SymTensor, env_r: &EnvTensor, x: &SymTensor) -> Result<SymTensor> {
    // (a', b_l, sigma_l, sigma_l1, a_l2)
    let t = SymTensor::contract(env_l, x, &[(2, 1)])?;
    // (a', sigma_l1, a_l2, tau_l, b_l1)
    let t = SymTensor::contract(&t, w_l, &[(1, 2), (2, 0)])?;
    // (a', a_l2, tau_l, tau_l1, b_l2)
    let t = SymTensor::contract(&t, w_l1, &[(4, 2), (1, 0)])?;
    // (a', tau_l, tau_l1, a'_l2)
    let t = SymTensor::contract(&t, env_r, &[(1, 2), (4, 1)])?;
    Ok(t.permute(&[1, 0, 2, 3]))
}

struct Sweeper<'a> {
    op: &'a AsMpo,
    opts: DmrgOptions,
    policy: TruncationPolicy,
    sites: Vec<SymTensor>,
    left: Vec<Option<EnvTensor>>,
    right: Vec<Option<EnvTensor>>,
    all_converged: bool,
}

impl Sweeper<'_> {
    fn n(&self) -> usize {
        self.sites.len()
    }

    fn env_l(&self, l: usize) -> &EnvTensor {
        self.left[l].as_ref().expect("left environment")
    }

    fn env_r(&self, l: usize) -> &EnvTensor {
        self.right[l].as_ref().expect("right environment")
    }

    /// Lowest eigenpair at bond `(l, l + 1)`, as a normalized two-site tensor.
    fn solve(&mut self, l: usize) -> Result<(f64, SymTensor)> {
        let mut theta = SymTensor::contract(&self.sites[l], &self.sites[l + 1], &[(2, 1)])?;
        if l == 0 {
            let edge = widened_leg(self.sites[0].leg(1), self.op.site(0).leg(2));
            theta = theta.with_leg(1, edge.clone())?;
            self.left[0] = Some(left_boundary(&edge, self.op.site(0).leg(2), &edge.with_dir(Dir::Out)));
        }
        let layout = BlockLayout::new(theta.legs().to_vec());
        if layout.dim() == 0 {
            return Err(Error::EmptyTensor);
        }
        let (el, er) = (self.env_l(l), self.env_r(l + 2));
        let (wl, wl1) = (self.op.site(l), self.op.site(l + 1));
        let apply = |v: &[C64]| -> Vec<C64> {
            let x = layout.unflatten(v);
            let y = effective_apply(el, wl, wl1, er, &x).expect("effective operator legs");
            layout.flatten(&y)
        };
        let res = lowest_eigenpair(apply, &layout.flatten(&theta), self.opts.lanczos_max_iter, self.opts.lanczos_tol);
        self.all_converged &= res.converged;
        Ok((res.value, layout.unflatten(&res.vector)))
    }

    /// Split into a left-canonical site `l` and the center at `l + 1`.
    fn split_right(&mut self, l: usize, theta: &SymTensor) -> Result<f64> {
        let svd = theta.block_svd(&[0, 1], &[2, 3], &self.policy)?;
        let next = svd.sv().permute(&[1, 0, 2]);
        let nn = next.norm();
        self.sites[l] = if l == 0 { svd.u.trim_leg(1) } else { svd.u };
        self.sites[l + 1] = next.scale(C64::new(1.0 / nn, 0.0));
        self.left[l + 1] = Some(grow_left(self.env_l(l), &self.sites[l], self.op.site(l), &self.sites[l])?);
        Ok(svd.discarded_weight)
    }

    /// Split into the center at `l` and a right-canonical site `l + 1`.
    fn split_left(&mut self, l: usize, theta: &SymTensor) -> Result<f64> {
        let svd = theta.block_svd(&[0, 1], &[2, 3], &self.policy)?;
        let cur = svd.us();
        let nc = cur.norm();
        let cur = cur.scale(C64::new(1.0 / nc, 0.0));
        self.sites[l] = if l == 0 { cur.trim_leg(1) } else { cur };
        self.sites[l + 1] = svd.v.permute(&[1, 0, 2]);
        self.right[l + 1] = Some(grow_right(self.env_r(l + 2), &self.sites[l + 1], self.op.site(l + 1), &self.sites[l + 1])?);
        Ok(svd.discarded_weight)
    }

    /// One left-to-right-to-left sweep; returns the final energy and the
    /// summed discarded weight.
    fn sweep(&mut self) -> Result<(f64, f64)> {
        let n = self.n();
        let mut discarded = 0.0;
        for l in 0..n - 2 {
            let (_, theta) = self.solve(l)?;
            discarded += self.split_right(l, &theta)?;
        }
        let mut energy = 0.0;
        for l in (0..n - 1).rev() {
            let (e, theta) = self.solve(l)?;
            discarded += self.split_left(l, &theta)?;
            energy = e;
        }
        Ok((energy, discarded))
    }

    fn max_bond(&self) -> usize {
        self.sites.iter().map(|t| t.leg(2).total_dim()).max().unwrap_or(1)
    }
}

/// Ground state of `op` by two-site sweeps from `initial`.
pub fn ground_state(op: &AsMpo, initial: &AsMps, opts: &DmrgOptions) -> Result<DmrgResult> {
    ground_state_with_progress(op, initial, opts, |_| {})
}

/// [`ground_state`], reporting each finished sweep to `progress`.
pub fn ground_state_with_progress(
    op: &AsMpo,
    initial: &AsMps,
    opts: &DmrgOptions,
    mut progress: impl FnMut(&SweepRecord),
) -> Result<DmrgResult> {
    opts.validate()?;
    let n = initial.len();
    if n != op.len() {
        return Err(Error::LengthMismatch(n, op.len()));
    }
    if n < 2 {
        return Err(Error::InvalidParams("two-site sweeps need at least two sites".into()));
    }
    for l in 0..n {
        if initial.spaces()[l] != op.spaces()[l] {
            return Err(Error::PhysicalSectorMismatch(l));
        }
    }
    if initial.is_zero() || initial.norm() == 0.0 {
        return Err(Error::ZeroNormInitial);
    }
    if n <= 4 {
        check_hermitian(op)?;
    }

    let psi = initial.canonicalize(0)?.normalized();
    let mut sw = Sweeper {
        op,
        opts: *opts,
        policy: opts.policy(),
        sites: psi.sites().to_vec(),
        left: vec![None; n + 1],
        right: vec![None; n + 1],
        all_converged: true,
    };
    sw.right[n] = Some(right_boundary());
    for l in (2..n).rev() {
        sw.right[l] = Some(grow_right(sw.env_r(l + 1), &sw.sites[l], op.site(l), &sw.sites[l])?);
    }

    let mut history: Vec<SweepRecord> = Vec::new();
    let mut converged = false;
    for sweep in 1..=opts.max_sweeps {
        sw.all_converged = true;
        let (energy, discarded_weight) = sw.sweep()?;
        let rec = SweepRecord { sweep, energy, max_bond: sw.max_bond(), discarded_weight };
        progress(&rec);
        let settled = history.last().is_some_and(|p| (p.energy - energy).abs() < opts.energy_tolerance);
        history.push(rec);
        if settled {
            converged = sw.all_converged;
            break;
        }
    }
    let energy = history.last().map(|r| r.energy).unwrap_or(f64::NAN);
    let state = AsMps::from_parts(sw.sites, psi.spaces().to_vec(), Some(0));
    Ok(DmrgResult { energy, state, history, converged })
}

/// Dense Hermiticity check for small chains.
fn check_hermitian(op: &AsMpo) -> Result<()> {
    let h = oracle::mpo_to_dense(op)?;
    let scale = linalg::frobenius(&h).max(1.0);
    let err = linalg::frobenius(&(&h - &linalg::dagger(&h)));
    if err > 1e-10 * scale {
        return Err(Error::InvalidParams(format!("operator is not Hermitian (|H - H^dag| = {err:e})")));
    }
    Ok(())
}
