//! Time evolution of as-MPS.
//!
//! Two steppers share one driver: fourth-order Runge-Kutta built from MPO
//! applications of a single premultiplied generator, and the hybrid scheme
//! `exp(G_a dt/2) exp(G_s dt) exp(G_a dt/2)` where the charge-conserving
//! part `G_s` is applied as even/odd gates and the charge-shifting part
//! `G_a` as a bond-dimension-one as-MPO. Both work for pure states
//! (`G = -iH`) and for vectorized density operators (`G = L`).

mod trajectory;

pub use trajectory::{Record, Trajectory, TrajectoryMeta};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{exp_asymmetric_mpo, trotter_gates, Gate, GateSchedule, LocalTerm};
use crate::netops::{matrix_element, AsMpo, AsMps};
use crate::space::LocalSpace;
use crate::symtensor::{SymTensor, TruncationPolicy};
use crate::C64;

/// Default bound on the cumulative discarded weight.
pub const DEFAULT_BLOWUP_BOUND: f64 = 1e-3;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Rk4Mpo,
    HybridTrotter,
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Renormalize {
    #[default]
    None,
    UnitNorm,
    UnitTrace,
}

/// What the evolved vector represents, which fixes how it is measured.
#[derive(Clone, Debug)]
pub enum StateKind {
    /// A wave function: `<O> = <psi|O|psi> / <psi|psi>`, `P_q` = sector weight.
    Pure,
    /// A vectorized density operator: `<O> = <1|O|rho> / <1|rho>` with the
    /// vectorized identity `<1|`; `P_N` = trace of the sector `q = 2N`.
    Density { identity: AsMps },
}

/// A recorded observable; `interval` counts steps.
#[derive(Clone, Debug)]
pub struct Observable {
    pub label: String,
    pub op: AsMpo,
    pub interval: usize,
}

impl Observable {
    pub fn new(label: impl Into<String>, op: AsMpo) -> Observable {
        Observable { label: label.into(), op, interval: 1 }
    }
}

#[derive(Clone, Debug)]
pub struct EvolutionPlan {
    pub scheme: Scheme,
    pub dt: f64,
    pub n_steps: usize,
    pub policy: TruncationPolicy,
    pub observables: Vec<Observable>,
    pub renormalize: Renormalize,
    /// Steps between records of norm and sector distribution.
    pub record_interval: usize,
    /// Abort when the cumulative discarded weight exceeds this.
    pub blowup_bound: f64,
    pub kind: StateKind,
}

impl EvolutionPlan {
    pub fn new(scheme: Scheme, dt: f64, n_steps: usize, policy: TruncationPolicy) -> EvolutionPlan {
        EvolutionPlan {
            scheme,
            dt,
            n_steps,
            policy,
            observables: Vec::new(),
            renormalize: Renormalize::None,
            record_interval: 1,
            blowup_bound: DEFAULT_BLOWUP_BOUND,
            kind: StateKind::Pure,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidParams(format!("dt must be positive, got {}", self.dt)));
        }
        if self.n_steps == 0 || self.record_interval == 0 || self.observables.iter().any(|o| o.interval == 0) {
            return Err(Error::InvalidParams("step counts and intervals must be positive".into()));
        }
        if self.renormalize == Renormalize::UnitTrace && matches!(self.kind, StateKind::Pure) {
            return Err(Error::InvalidParams("unit_trace renormalization needs a density state".into()));
        }
        Ok(())
    }
}

/// The operator data a scheme steps with.
#[derive(Clone, Debug)]
pub enum Propagator {
    Rk4 { generator: AsMpo },
    Hybrid { gates: GateSchedule, asym_half: Option<AsMpo> },
}

impl Propagator {
    pub fn scheme(&self) -> Scheme {
        match self {
            Propagator::Rk4 { .. } => Scheme::Rk4Mpo,
            Propagator::Hybrid { .. } => Scheme::HybridTrotter,
        }
    }

    /// Second-order hybrid propagator from charge-conserving terms `sym`
    /// (nearest-neighbour) and single-site charge-shifting terms `asym`.
    pub fn hybrid(spaces: &[LocalSpace], sym: &[LocalTerm], asym: &[LocalTerm], dt: f64) -> Result<Propagator> {
        let gates = trotter_gates(spaces, sym, dt, 2)?;
        let asym_half = if asym.is_empty() { None } else { Some(exp_asymmetric_mpo(spaces, asym, dt / 2.0)?) };
        Ok(Propagator::Hybrid { gates, asym_half })
    }

    pub fn step(&self, state: &AsMps, dt: f64, policy: &TruncationPolicy) -> Result<(AsMps, f64)> {
        match self {
            Propagator::Rk4 { generator } => rk4_step(generator, state, dt, policy),
            Propagator::Hybrid { gates, asym_half } => match asym_half {
                Some(a) => hybrid_step(gates, a, state, policy),
                None => apply_schedule(gates, state, policy),
            },
        }
    }
}

/// One classical fourth-order Runge-Kutta step of `d psi/dt = G psi`.
/// Every `k_i` and the final combination are compressed under `policy`;
/// the returned weight is the sum of all discarded weights.
pub fn rk4_step(generator: &AsMpo, state: &AsMps, dt: f64, policy: &TruncationPolicy) -> Result<(AsMps, f64)> {
    if generator.is_zero() {
        return Ok((state.clone(), 0.0));
    }
    let half = C64::new(dt / 2.0, 0.0);
    let mut err = 0.0;
    let mut apply = |psi: &AsMps| -> Result<AsMps> {
        let (k, e) = psi.apply_mpo(generator, policy)?;
        err += e;
        Ok(k)
    };
    let k1 = apply(state)?;
    let k2 = apply(&state.add(&k1.scale(half))?)?;
    let k3 = apply(&state.add(&k2.scale(half))?)?;
    let k4 = apply(&state.add(&k3.scale(C64::new(dt, 0.0)))?)?;
    let two = C64::new(2.0, 0.0);
    let incr = k1.add(&k2.scale(two))?.add(&k3.scale(two))?.add(&k4)?;
    let next = state.add(&incr.scale(C64::new(dt / 6.0, 0.0)))?;
    let (next, e) = next.compress(policy)?;
    Ok((next, err + e))
}

/// `asym_half`, then the gate layers, then `asym_half` again.
pub fn hybrid_step(gates: &GateSchedule, asym_half: &AsMpo, state: &AsMps, policy: &TruncationPolicy) -> Result<(AsMps, f64)> {
    let (psi, e1) = state.apply_mpo(asym_half, policy)?;
    let (psi, e2) = apply_schedule(gates, &psi, policy)?;
    let (psi, e3) = psi.apply_mpo(asym_half, policy)?;
    Ok((psi, e1 + e2 + e3))
}

/// Apply every layer of `gates`, sweeping alternately left-to-right and
/// right-to-left so the orthogonality center only moves one site between
/// consecutive gates.
pub fn apply_schedule(gates: &GateSchedule, state: &AsMps, policy: &TruncationPolicy) -> Result<(AsMps, f64)> {
    let mut psi = state.clone();
    let mut err = 0.0;
    for (k, layer) in gates.layers.iter().enumerate() {
        let rightward = k % 2 == 0;
        let order: Vec<&Gate> = if rightward { layer.iter().collect() } else { layer.iter().rev().collect() };
        for g in order {
            let (next, e) = apply_gate(&psi, g, policy, rightward)?;
            psi = next;
            err += e;
        }
    }
    Ok((psi, err))
}

/// Apply one gate. A two-site gate is split with the center left at the
/// right site (`rightward`) or the left site.
pub fn apply_gate(state: &AsMps, gate: &Gate, policy: &TruncationPolicy, rightward: bool) -> Result<(AsMps, f64)> {
    let l = gate.site;
    if gate.span == 1 {
        let mut psi = state.canonicalize(l)?;
        // (a_l, a_l1, tau)
        let t = SymTensor::contract(psi.site(l), &gate.tensor, &[(0, 0)])?;
        psi.set_site(l, t.permute(&[2, 0, 1]), Some(l));
        return Ok((psi, 0.0));
    }
    if l + 1 >= state.len() {
        return Err(Error::SiteOutOfRange { site: l + 1, len: state.len() });
    }
    let mut psi = state.canonicalize(if rightward { l } else { l + 1 })?;
    let theta = SymTensor::contract(psi.site(l), psi.site(l + 1), &[(2, 1)])?;
    // (a_l, a_l2, tau_l, tau_l1)
    let t = SymTensor::contract(&theta, &gate.tensor, &[(0, 0), (2, 1)])?;
    let t = t.permute(&[2, 0, 3, 1]);
    if t.is_empty() {
        return Err(Error::EmptyTensor);
    }
    let svd = t.block_svd(&[0, 1], &[2, 3], policy)?;
    if rightward {
        let b = svd.sv().permute(&[1, 0, 2]);
        psi.set_sites(l, svd.u, b, Some(l + 1));
    } else {
        let a = svd.us();
        psi.set_sites(l, a, svd.v.permute(&[1, 0, 2]), Some(l));
    }
    Ok((psi, svd.discarded_weight))
}

/// Measured quantities of a state.
struct Measurement {
    norm: f64,
    sectors: BTreeMap<i32, f64>,
    odd_weight: Option<f64>,
    scale: C64,
}

fn measure(psi: &AsMps, kind: &StateKind) -> Result<Measurement> {
    match kind {
        StateKind::Pure => {
            let split = psi.sector_split()?;
            let total = split.total_weight();
            let sectors = split.weights().into_iter().map(|(q, w)| (q.0, if total > 0.0 { w / total } else { 0.0 })).collect();
            Ok(Measurement { norm: total.sqrt(), sectors, odd_weight: None, scale: C64::new(total, 0.0) })
        }
        StateKind::Density { identity } => {
            let traces = psi.sector_overlaps(identity)?;
            let tr: C64 = traces.iter().map(|(_, t)| *t).sum();
            let mut sectors = BTreeMap::new();
            for (q, t) in &traces {
                if q.0 % 2 == 0 {
                    sectors.insert(q.0 / 2, if tr.norm() > 0.0 { (t / tr).re } else { 0.0 });
                }
            }
            let odd: f64 = psi.sector_split()?.weights().iter().filter(|(q, _)| q.0 % 2 != 0).fold(0.0, |acc, (_, w)| acc + w);
            Ok(Measurement { norm: tr.re, sectors, odd_weight: Some(odd), scale: tr })
        }
    }
}

fn observable_value(psi: &AsMps, op: &AsMpo, kind: &StateKind, scale: C64) -> Result<f64> {
    let v = match kind {
        StateKind::Pure => matrix_element(psi, op, psi)?,
        StateKind::Density { identity } => matrix_element(identity, op, psi)?,
    };
    Ok(if scale.norm() > 0.0 { (v / scale).re } else { f64::NAN })
}

fn record(plan: &EvolutionPlan, step: usize, psi: &AsMps, truncation: f64) -> Result<Record> {
    let m = measure(psi, &plan.kind)?;
    let mut observables = Vec::with_capacity(plan.observables.len());
    for o in &plan.observables {
        let v = if step.is_multiple_of(o.interval) { Some(observable_value(psi, &o.op, &plan.kind, m.scale)?) } else { None };
        observables.push(v);
    }
    Ok(Record {
        step,
        t: step as f64 * plan.dt,
        norm: m.norm,
        observables,
        sectors: m.sectors,
        odd_weight: m.odd_weight,
        truncation,
        max_bond: psi.max_bond(),
    })
}

fn renormalize(psi: AsMps, mode: Renormalize, kind: &StateKind) -> Result<AsMps> {
    match (mode, kind) {
        (Renormalize::None, _) => Ok(psi),
        (Renormalize::UnitNorm, _) => Ok(psi.normalized()),
        (Renormalize::UnitTrace, StateKind::Density { identity }) => {
            let tr = crate::netops::overlap(identity, &psi)?;
            if tr.norm() == 0.0 {
                return Ok(psi);
            }
            Ok(psi.scale(C64::new(1.0, 0.0) / tr))
        }
        (Renormalize::UnitTrace, StateKind::Pure) => Err(Error::InvalidParams("unit_trace needs a density state".into())),
    }
}

/// Run `plan` from `initial`. Records are taken at step 0, every
/// `record_interval` steps and at the last step.
pub fn evolve(plan: &EvolutionPlan, propagator: &Propagator, initial: &AsMps) -> Result<Trajectory> {
    evolve_with(plan, propagator, initial, |_, _| Ok(()))
}

/// [`evolve`], calling `hook(step, state)` after every step.
pub fn evolve_with(
    plan: &EvolutionPlan,
    propagator: &Propagator,
    initial: &AsMps,
    mut hook: impl FnMut(usize, &AsMps) -> Result<()>,
) -> Result<Trajectory> {
    plan.validate()?;
    if propagator.scheme() != plan.scheme {
        return Err(Error::InvalidParams(format!("plan scheme {:?} does not match the propagator", plan.scheme)));
    }
    if let Propagator::Hybrid { gates, .. } = propagator {
        if (gates.dt - plan.dt).abs() > 1e-15 * plan.dt {
            return Err(Error::InvalidParams(format!("gates were built for dt = {}, plan has {}", gates.dt, plan.dt)));
        }
    }
    if initial.is_zero() || initial.norm() == 0.0 {
        return Err(Error::ZeroNormInitial);
    }
    let mut psi = initial.clone();
    let mut truncation = 0.0;
    let mut records = vec![record(plan, 0, &psi, 0.0)?];
    for step in 1..=plan.n_steps {
        let (next, e) = propagator.step(&psi, plan.dt, &plan.policy)?;
        truncation += e;
        if truncation > plan.blowup_bound {
            return Err(Error::TruncationBlowup { weight: truncation, bound: plan.blowup_bound });
        }
        psi = renormalize(next, plan.renormalize, &plan.kind)?;
        hook(step, &psi)?;
        if step % plan.record_interval == 0 || step == plan.n_steps {
            records.push(record(plan, step, &psi, truncation)?);
        }
    }
    let meta = TrajectoryMeta {
        scheme: plan.scheme,
        dt: plan.dt,
        n_steps: plan.n_steps,
        policy: plan.policy,
        renormalize: plan.renormalize,
        density: matches!(plan.kind, StateKind::Density { .. }),
        labels: plan.observables.iter().map(|o| o.label.clone()).collect(),
        cumulative_truncation: truncation,
        final_max_bond: psi.max_bond(),
    };
    Ok(Trajectory { meta, records, final_state: psi })
}
