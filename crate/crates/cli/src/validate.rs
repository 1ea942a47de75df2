//! Oracle-equivalence and invariant suites behind `adaptmps validate`.

use std::collections::BTreeMap;
use std::time::Instant;

use adaptmps::dmrg::{ground_state, DmrgOptions};
use adaptmps::linalg;
use adaptmps::models::{
    boson_spaces, density_from_pure, density_observable, local_operator, lindblad_mpo, mpo_bose_hubbard, mpo_from_terms,
    mpo_xyz, spin_spaces, trace_state, unitary_generator, xyz_terms, LindbladModel, ModelParams,
};
use adaptmps::netops::Checkpoint;
use adaptmps::oracle::{self, fixtures, ops, DenseLindblad, DenseSystem};
use adaptmps::tevo::{evolve, EvolutionPlan, Observable, Propagator, Scheme, StateKind};
use adaptmps::{AsMps, Charge, Error, SymTensor, TruncationPolicy, C64};
use anyhow::Result;
use ndarray::{Array1, Array2, ArrayD, IxDyn};
use serde::{Deserialize, Serialize};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Fast,
    Full,
}

/// Deliberate defects used to check that the suites catch them.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Fault {
    /// Slip a block that breaks the fusion rule into the fixture tensors.
    Fusion,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuiteReport {
    pub name: String,
    pub passed: bool,
    pub seconds: f64,
    pub checks: Vec<CheckResult>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub level: Level,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fault: Option<Fault>,
    pub suites: Vec<SuiteReport>,
}

impl Report {
    pub fn failed_suites(&self) -> Vec<&str> {
        self.suites.iter().filter(|s| !s.passed).map(|s| s.name.as_str()).collect()
    }
}

struct Suite {
    checks: Vec<CheckResult>,
}

impl Suite {
    fn new() -> Suite {
        Suite { checks: Vec::new() }
    }

    /// Record `err <= tol`; an `Err` from the measurement counts as a failure.
    fn within(&mut self, name: &str, tol: f64, measure: impl FnOnce() -> Result<f64>) {
        let check = match measure() {
            Ok(err) => CheckResult { name: name.into(), passed: err <= tol, error: Some(err), tolerance: Some(tol), detail: None },
            Err(e) => CheckResult { name: name.into(), passed: false, error: None, tolerance: Some(tol), detail: Some(format!("{e:#}")) },
        };
        self.checks.push(check);
    }

    fn holds(&mut self, name: &str, test: impl FnOnce() -> Result<std::result::Result<(), String>>) {
        let (passed, detail) = match test() {
            Ok(Ok(())) => (true, None),
            Ok(Err(why)) => (false, Some(why)),
            Err(e) => (false, Some(format!("{e:#}"))),
        };
        self.checks.push(CheckResult { name: name.into(), passed, error: None, tolerance: None, detail });
    }
}

fn max_abs(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    (a - b).iter().map(|x| x.norm()).fold(0.0, f64::max)
}

fn max_abs_vec(a: &Array1<C64>, b: &Array1<C64>) -> f64 {
    (a - b).iter().map(|x| x.norm()).fold(0.0, f64::max)
}

fn xyz(l: usize, gamma: f64, delta: f64, h: f64) -> ModelParams {
    ModelParams { l, gamma, delta, h, ..Default::default() }
}

fn fixture_tensors(fault: Option<Fault>) -> Vec<SymTensor> {
    let mut ts: Vec<SymTensor> = fixtures::appendix_tensors().to_vec();
    if fault == Some(Fault::Fusion) {
        let m1 = &ts[0];
        let mut blocks = m1.blocks().clone();
        blocks.insert(vec![Charge(1), Charge(1), Charge(1)], ArrayD::from_elem(IxDyn(&[1, 1, 1]), C64::new(0.5, 0.0)));
        ts[0] = SymTensor::from_parts_unchecked(m1.legs().to_vec(), blocks);
    }
    ts
}

fn fusion_suite(level: Level, fault: Option<Fault>) -> Suite {
    let mut s = Suite::new();
    s.holds("fixture blocks obey the fusion rule", || {
        for (i, t) in fixture_tensors(fault).iter().enumerate() {
            if let Err(e) = t.validate() {
                return Ok(Err(format!("M{}: {e}", i + 1)));
            }
        }
        Ok(Ok(()))
    });
    s.holds("a charge-violating key is rejected", || {
        let key = vec![Charge(1), Charge(1), Charge(1)];
        let res = SymTensor::new(fixtures::m1_legs(), vec![(key, ArrayD::from_elem(IxDyn(&[1, 1, 1]), C64::new(1.0, 0.0)))]);
        Ok(match res {
            Err(Error::FusionViolation { flux: -1, .. }) => Ok(()),
            other => Err(format!("expected a fusion violation with flux -1, got {other:?}")),
        })
    });
    let n = if level == Level::Full { 500 } else { 150 };
    s.holds("random results obey the fusion rule", || {
        let r = fixtures::dense_equivalence(n, 11, 64)?;
        Ok(if r.fusion_violations == 0 { Ok(()) } else { Err(format!("{} violating tensors", r.fusion_violations)) })
    });
    s
}

fn dense_suite(level: Level) -> Suite {
    let mut s = Suite::new();
    let n = if level == Level::Full { 500 } else { 150 };
    s.within(&format!("{n} random contract/add/svd cases against dense"), 1e-12, || Ok(fixtures::dense_equivalence(n, 5, 64)?.max_rel_error));
    s.within("M2 . M3 blocks", 0.0, || {
        let [_, m2, m3] = fixtures::appendix_tensors();
        let c = SymTensor::contract(&m2, &m3, &[(2, 1)])?;
        // legs (sigma_2, a_2, sigma_3, a_4)
        let key = |v: [i32; 4]| v.map(Charge).to_vec();
        let one = C64::new(1.0, 0.0);
        let got = [c.block(&key([0, 0, 0, 0])), c.block(&key([1, 1, 0, 0]))];
        Ok(if c.num_blocks() == 2 && got.iter().all(|b| b.is_some_and(|b| b.iter().all(|&x| x == one))) { 0.0 } else { 1.0 })
    });
    s
}

fn appendix_suite() -> Suite {
    let mut s = Suite::new();
    s.within("example state against its dense vector", 1e-15, || {
        let v = oracle::mps_to_dense(&fixtures::appendix_state()?)?;
        Ok(max_abs_vec(&v, &fixtures::appendix_vector()))
    });
    s.holds("sum of basis states compresses to the example charges", || {
        let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let a = AsMps::basis_state(spin_spaces(3), &[1, 1, 0])?.scale(h);
        let b = AsMps::basis_state(spin_spaces(3), &[1, 0, 0])?.scale(h);
        let (c, _) = a.add(&b)?.compress(&TruncationPolicy::exact())?;
        Ok(if c.a1_charges() == vec![Charge(1), Charge(2)] && c.bond_dims() == vec![2, 1] {
            Ok(())
        } else {
            Err(format!("charges {:?}, bonds {:?}", c.a1_charges(), c.bond_dims()))
        })
    });
    s.holds("b1 charge sets", || {
        let b0 = mpo_xyz(&xyz(3, 0.0, 1.5, 0.0))?.b1_charges();
        let b1 = mpo_xyz(&xyz(3, 0.5, 1.5, 0.0))?.b1_charges();
        Ok(if b0 == vec![Charge(0)] && b1 == vec![Charge(-2), Charge(0), Charge(2)] {
            Ok(())
        } else {
            Err(format!("gamma=0: {b0:?}, gamma=0.5: {b1:?}"))
        })
    });
    s.within("three-site MPO display minus identity", 1e-12, || {
        let h = oracle::mpo_to_dense(&mpo_xyz(&xyz(3, 0.5, 1.5, 0.0))?)?;
        let display = oracle::appendix_xyz_mpo(0.5, 1.5);
        Ok(max_abs(&(h + linalg::identity(8)), &display))
    });
    s
}

fn models_suite() -> Suite {
    let mut s = Suite::new();
    s.within("xyz MPO against Kronecker sums", 1e-12, || {
        let mut err: f64 = 0.0;
        for (l, g, d, h) in [(2, 0.0, 1.5, 0.0), (3, 0.5, 1.5, 0.0), (4, 0.3, -0.7, 0.5), (4, 1.0, 1.5, 0.5)] {
            let m = oracle::mpo_to_dense(&mpo_xyz(&xyz(l, g, d, h))?)?;
            err = err.max(max_abs(&m, &oracle::xyz_hamiltonian(l, g, d, h)));
            err = err.max(max_abs(&m, &linalg::dagger(&m)));
        }
        Ok(err)
    });
    s.within("Bose-Hubbard MPO against Kronecker sums", 1e-12, || {
        let p = ModelParams { l: 3, d: 3, j: 1.0, u: 4.0, ..Default::default() };
        let m = oracle::mpo_to_dense(&mpo_bose_hubbard(&p)?)?;
        Ok(max_abs(&m, &oracle::bose_hubbard_hamiltonian(3, 3, 1.0, 4.0)).max(max_abs(&m, &linalg::dagger(&m))))
    });
    s.within("Lindblad split sums to the dense superoperator", 1e-12, || {
        let p = ModelParams { l: 2, d: 3, j: 1.0, u: 4.0, lambda1: 1.0, lambda_l: 0.5, nbar1: 0.75, nbar_l: 0.25, ..Default::default() };
        let (sym, asym) = lindblad_mpo(&p)?;
        let sum = oracle::mpo_to_dense(&sym)? + oracle::mpo_to_dense(&asym)?;
        let dense = DenseLindblad::bose_hubbard(2, 3, 1.0, 4.0, 1.0, 0.5, 0.75, 0.25).vectorized_matrix()?;
        Ok(max_abs(&sum, &dense))
    });
    s
}

fn dmrg_suite(level: Level) -> Suite {
    let mut s = Suite::new();
    s.within("two-site XXZ energy", 1e-10, || {
        let op = mpo_xyz(&xyz(2, 0.0, 1.5, 0.0))?;
        let init = AsMps::basis_state(spin_spaces(2), &[1, 0])?;
        Ok((ground_state(&op, &init, &DmrgOptions::default())?.energy + 3.5).abs())
    });
    let l = if level == Level::Full { 8 } else { 6 };
    for gamma in [0.0, 0.5] {
        s.within(&format!("L={l} gamma={gamma} energy against dense"), 1e-8, || {
            let p = xyz(l, gamma, 1.5, 0.5);
            let sp = spin_spaces(l);
            let init = AsMps::random(sp.clone(), &[Charge(l as i32 / 2)], 8, 1, false)?;
            let e = ground_state(&mpo_xyz(&p)?, &init, &DmrgOptions::default())?.energy;
            let sys = DenseSystem::new(&sp, oracle::xyz_hamiltonian(l, gamma, 1.5, 0.5), oracle::DEFAULT_CAP)?;
            let sectors: Vec<Charge> = if gamma == 0.0 {
                vec![Charge(l as i32 / 2)]
            } else {
                (0..=l as i32).filter(|q| (q - l as i32 / 2) % 2 == 0).map(Charge).collect()
            };
            Ok((e - sys.ground_over(&sectors)?).abs())
        });
    }
    s
}

fn evolution_suite(level: Level) -> Suite {
    let mut s = Suite::new();
    let exact = TruncationPolicy::exact();
    s.within("L=4 quench against dense", 1e-8, || {
        let l = 4;
        let sp = spin_spaces(l);
        let init = AsMps::random(sp.clone(), &[Charge(2)], 4, 3, false)?;
        let gs = ground_state(&mpo_xyz(&xyz(l, 0.0, 1.5, 0.5))?, &init, &DmrgOptions::default())?.state;
        let gen = mpo_from_terms(&sp, &unitary_generator(&xyz_terms(&xyz(l, 0.5, 1.5, 0.5))), &exact)?;
        let mut plan = EvolutionPlan::new(Scheme::Rk4Mpo, 0.01, 20, exact);
        plan.observables = (0..l).map(|k| Ok(Observable::new(format!("sz_{k}"), local_operator(&sp, k, &ops::sigma_z())?))).collect::<Result<_>>()?;
        let traj = evolve(&plan, &Propagator::Rk4 { generator: gen }, &gs)?;
        let sys = DenseSystem::new(&sp, oracle::xyz_hamiltonian(l, 0.5, 1.5, 0.5), oracle::DEFAULT_CAP)?;
        let v0 = oracle::mps_to_dense(&gs)?;
        let mut err: f64 = 0.0;
        for r in &traj.records {
            let v = sys.evolve_eig(&v0, r.t);
            for k in 0..l {
                let want = DenseSystem::expect(&v, &oracle::embed(&[2; 4], &[(k, &ops::sigma_z())])).re;
                err = err.max((r.observables[k].unwrap_or(f64::NAN) - want).abs());
            }
        }
        Ok(err)
    });
    let t_final = if level == Level::Full { 1.0 } else { 0.2 };
    s.within(&format!("L=3 d=4 Lindblad hybrid to t={t_final} against dense"), 1e-5, || {
        let p = ModelParams { l: 3, d: 4, j: 1.0, u: 4.0, lambda1: 1.0, lambda_l: 1.0, nbar1: 0.75, nbar_l: 0.25, ..Default::default() };
        let base = boson_spaces(3, 4);
        let gs = ground_state(&mpo_bose_hubbard(&p)?, &AsMps::basis_state(base.clone(), &[1, 0, 0])?, &DmrgOptions::default())?.state.normalized();
        let model = LindbladModel::bose_hubbard(&p)?;
        let dt = 0.005;
        let (sym, local) = model.hybrid_parts()?;
        let prop = Propagator::hybrid(&model.spaces, &sym, &local, dt)?;
        let mut plan = EvolutionPlan::new(Scheme::HybridTrotter, dt, (t_final / dt).round() as usize, exact);
        plan.record_interval = 20;
        plan.kind = StateKind::Density { identity: trace_state(&base)? };
        plan.observables = (0..3).map(|k| Ok(Observable::new(format!("n_{k}"), density_observable(&base, k, &ops::boson_n(4))?))).collect::<Result<_>>()?;
        let traj = evolve(&plan, &prop, &density_from_pure(&gs)?)?;
        let dl = DenseLindblad::bose_hubbard(3, 4, 1.0, 4.0, 1.0, 1.0, 0.75, 0.25);
        let v = oracle::mps_to_dense(&gs)?;
        let mut rho = Array2::from_shape_fn((v.len(), v.len()), |(i, j)| v[i] * v[j].conj());
        let (mut now, mut err) = (0.0, 0.0f64);
        for r in &traj.records {
            rho = dl.evolve(&rho, r.t - now, 0.01);
            now = r.t;
            for (k, want) in dl.occupations(&rho).iter().enumerate() {
                err = err.max((r.observables[k].unwrap_or(f64::NAN) - want).abs());
            }
            err = err.max((r.norm - 1.0).abs());
        }
        Ok(err)
    });
    s
}

fn checkpoint_suite() -> Suite {
    let mut s = Suite::new();
    s.within("checkpoint round trip", 0.0, || {
        let psi = AsMps::random(spin_spaces(5), &[Charge(2), Charge(3)], 4, 9, true)?.canonicalize(2)?;
        let text = serde_json::to_string(&Checkpoint::from_mps(&psi, None))?;
        let back = serde_json::from_str::<Checkpoint>(&text)?.into_mps()?;
        Ok(max_abs_vec(&oracle::mps_to_dense(&psi)?, &oracle::mps_to_dense(&back)?))
    });
    s
}

/// Run every suite at `level`, optionally with an injected defect.
pub fn run_validate(level: Level, fault: Option<Fault>) -> Report {
    let suites: Vec<(&str, Box<dyn Fn() -> Suite + Sync>)> = vec![
        ("FusionViolation", Box::new(move || fusion_suite(level, fault))),
        ("DenseEquivalence", Box::new(move || dense_suite(level))),
        ("Appendix", Box::new(appendix_suite)),
        ("Models", Box::new(models_suite)),
        ("Dmrg", Box::new(move || dmrg_suite(level))),
        ("Evolution", Box::new(move || evolution_suite(level))),
        ("Checkpoint", Box::new(checkpoint_suite)),
    ];
    let mut done: BTreeMap<usize, SuiteReport> = BTreeMap::new();
    std::thread::scope(|scope| {
        let handles: Vec<_> = suites
            .iter()
            .enumerate()
            .map(|(i, (name, run))| {
                scope.spawn(move || {
                    let start = Instant::now();
                    let suite = run();
                    let passed = suite.checks.iter().all(|c| c.passed);
                    (i, SuiteReport { name: name.to_string(), passed, seconds: start.elapsed().as_secs_f64(), checks: suite.checks })
                })
            })
            .collect();
        for h in handles {
            let (i, r) = h.join().expect("suite thread panicked");
            done.insert(i, r);
        }
    });
    let suites: Vec<SuiteReport> = done.into_values().collect();
    let passed = suites.iter().all(|s| s.passed);
    Report { level, passed, fault, suites }
}
