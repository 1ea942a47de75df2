//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so the lines always reach
//! stdout. Exits nonzero if a criterion fails that is not listed in
//! `KNOWN_FAILURES`.

use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use adaptmps::linalg;
use adaptmps::models::{mpo_xyz, ModelParams};
use adaptmps::netops::Checkpoint;
use adaptmps::oracle::{self, fixtures, DenseLindblad, DenseSystem};
use adaptmps::{AsMps, Charge, LocalSpace, TruncationPolicy, C64};
use adaptmps_cli::run::{self, EvolutionArtifacts};
use adaptmps_cli::ExperimentConfig;
use anyhow::{ensure, Context, Result};
use ndarray::{Array1, Array2};
use serde_json::{json, Value};

/// Criteria expected to fail, with the reason printed next to the line.
const KNOWN_FAILURES: &[(usize, &str)] = &[(
    8,
    "the displayed three-site MPO multiplies out to H + 1; dense(mpo_xyz) matches the display minus the identity",
)];

struct Outcome {
    passed: bool,
    summary: String,
}

impl Outcome {
    fn new(passed: bool, summary: impl Into<String>) -> Outcome {
        Outcome { passed, summary: summary.into() }
    }
}

fn config(value: Value) -> Result<ExperimentConfig> {
    ExperimentConfig::from_json(&value.to_string())
}

fn xyz_model(l: usize, gamma: f64) -> Value {
    json!({"model": "xyz", "l": l, "gamma": gamma, "delta": 1.5, "h": 0.5})
}

fn bh_model() -> Value {
    json!({
        "model": "lindblad_bh", "l": 3, "d": 4, "j": 1.0, "u": 4.0,
        "lambda1": 1.0, "lambdaL": 1.0, "nbar1": 0.75, "nbarL": 0.25
    })
}

fn gs_config(dir: &Path, l: usize, gamma: f64, seed: u64) -> Result<ExperimentConfig> {
    config(json!({
        "model": xyz_model(l, gamma),
        "algorithm": {"gs": {"max_bond": 64}},
        "output": {"dir": dir},
        "seed": seed
    }))
}

fn column(art: &EvolutionArtifacts, label: &str) -> Result<Vec<f64>> {
    let k = art.trajectory.meta.labels.iter().position(|l| l == label).with_context(|| format!("no column {label}"))?;
    art.trajectory.records.iter().map(|r| r.observables[k].context("missing observable value")).collect()
}

fn criterion_1() -> Result<Outcome> {
    let r = fixtures::dense_equivalence(500, 2024, 64)?;
    let passed = r.cases == 500 && r.max_rel_error <= 1e-12 && r.fusion_violations == 0;
    Ok(Outcome::new(
        passed,
        format!(
            "{} cases ({} contract, {} add, {} svd), max rel err {:.1e}, {} fusion violations",
            r.cases, r.contractions, r.additions, r.decompositions, r.max_rel_error, r.fusion_violations
        ),
    ))
}

fn reachable(l: usize, gamma: f64) -> Vec<Charge> {
    let half = l as i32 / 2;
    if gamma == 0.0 {
        vec![Charge(half)]
    } else {
        (0..=l as i32).filter(|q| (q - half) % 2 == 0).map(Charge).collect()
    }
}

fn criterion_2(tmp: &Path) -> Result<Outcome> {
    let l = 8;
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for gamma in [0.0, 0.1, 0.5, 1.0] {
        let out = run::run_gs(&gs_config(&tmp.join(format!("c2_{gamma}")), l, gamma, 1)?)?;
        let sys = DenseSystem::new(&vec![LocalSpace::spin_half(); l], oracle::xyz_hamiltonian(l, gamma, 1.5, 0.5), 256)?;
        let exact = sys.ground_over(&reachable(l, gamma))?;
        let err = (out.report.energy - exact).abs();
        worst = worst.max(err);
        parts.push(format!("g={gamma}: {err:.1e}"));
    }
    Ok(Outcome::new(worst <= 1e-8, format!("|E_dmrg - E_exact| {} (tol 1e-8)", parts.join(", "))))
}

fn criterion_3(tmp: &Path) -> Result<Outcome> {
    let l = 8;
    let zero = run::run_gs(&gs_config(&tmp.join("c3_0"), l, 0.0, 3)?)?;
    let single = zero.sectors.len() == 1;
    let mut spaced = true;
    let mut spread = Vec::new();
    for gamma in [0.1, 0.4, 0.7, 1.0] {
        let out = run::run_gs(&gs_config(&tmp.join(format!("c3_{gamma}")), l, gamma, 3)?)?;
        for s in out.sectors.iter().filter(|s| s.weight > 0.0) {
            spaced &= s.sz_total.is_some_and(|sz| sz.rem_euclid(4) == 0);
        }
        spread.push(out.sectors.iter().filter(|s| s.weight > 1e-6).count());
    }
    let monotone = spread.windows(2).all(|w| w[0] <= w[1]);
    Ok(Outcome::new(
        single && spaced && monotone,
        format!(
            "gamma=0 sectors {} (want 1); gamma>0 S^z_T spaced by 4: {spaced}; sectors above 1e-6 for gamma 0.1/0.4/0.7/1.0: {spread:?}",
            zero.sectors.len()
        ),
    ))
}

fn criterion_4(tmp: &Path) -> Result<Outcome> {
    let l = 6;
    let gs = run::run_gs(&config(json!({
        "model": xyz_model(l, 0.0),
        "algorithm": {"gs": {"max_bond": 64}},
        "output": {"dir": tmp.join("c4_gs")},
        "seed": 4
    }))?)?;
    let ck = gs.dir.join(run::STATE_FILE);
    let art = run::run_quench(&config(json!({
        "model": xyz_model(l, 0.5),
        "algorithm": {"quench": {"scheme": "rk4_mpo", "dt": 1e-3, "t_final": 0.5, "max_bond": 64}},
        "initial": {"checkpoint": ck},
        "output": {"dir": tmp.join("c4"), "record_interval": 10}
    }))?)?;

    let psi0 = Checkpoint::load(&ck)?.into_mps()?;
    let v0 = oracle::mps_to_dense(&psi0)?;
    let sys = DenseSystem::new(&vec![LocalSpace::spin_half(); l], oracle::xyz_hamiltonian(l, 0.5, 1.5, 0.5), 64)?;
    let sz: Vec<Array2<C64>> = (0..l).map(|k| oracle::embed(&[2; 6], &[(k, &oracle::ops::sigma_z())])).collect();
    let cols: Vec<Vec<f64>> = (0..l).map(|k| column(&art, &format!("sz_{k}"))).collect::<Result<_>>()?;
    let mut err: f64 = 0.0;
    for (i, r) in art.trajectory.records.iter().enumerate() {
        let v = sys.evolve_eig(&v0, r.t);
        for k in 0..l {
            err = err.max((cols[k][i] - DenseSystem::expect(&v, &sz[k]).re).abs());
        }
    }
    let parity = column(&art, "parity")?;
    let drift = parity.iter().map(|p| (p - parity[0]).abs()).fold(0.0, f64::max);
    let q0 = (l / 2) as i32;
    let mut by_four = true;
    for r in &art.trajectory.records {
        for (&q, &w) in &r.sectors {
            if w > 1e-12 {
                by_four &= (2 * (q - q0)).rem_euclid(4) == 0;
            }
        }
    }
    let support = |r: &adaptmps::tevo::Record| r.sectors.values().filter(|&&w| w > 1e-12).count();
    let first = support(&art.trajectory.records[0]);
    let last = support(art.trajectory.records.last().context("empty trajectory")?);
    let passed = err <= 1e-6 && drift <= 1e-6 && by_four && last > first;
    Ok(Outcome::new(
        passed,
        format!("max |<sz_l> - exact| {err:.1e}, <P> drift {drift:.1e}, S^z_T steps of 4: {by_four}, support {first} -> {last} sectors"),
    ))
}

/// Ground state of the closed chain with `n` particles, as a density matrix.
fn dense_initial(p: &ModelParams, n: i32) -> Result<Array2<C64>> {
    let spaces = vec![LocalSpace::boson(p.d); p.l];
    let sys = DenseSystem::new(&spaces, oracle::bose_hubbard_hamiltonian(p.l, p.d, p.j, p.u), oracle::DEFAULT_CAP)?;
    let (_, v) = sys.ground(Some(Charge(n)))?;
    Ok(Array2::from_shape_fn((v.len(), v.len()), |(i, j)| v[i] * v[j].conj()))
}

/// Max over records and sites of the occupation error against the dense
/// Lindblad oracle, with the max trace and odd-sector deviations.
fn lindblad_errors(art: &EvolutionArtifacts, p: &ModelParams) -> Result<(f64, f64, f64)> {
    let dl = DenseLindblad::bose_hubbard(p.l, p.d, p.j, p.u, p.lambda1, p.lambda_l, p.nbar1, p.nbar_l);
    let mut rho = dense_initial(p, (p.l / 2) as i32)?;
    let cols: Vec<Vec<f64>> = (0..p.l).map(|k| column(art, &format!("n_{k}"))).collect::<Result<_>>()?;
    let (mut now, mut err, mut trace, mut odd) = (0.0, 0.0f64, 0.0f64, 0.0f64);
    for (i, r) in art.trajectory.records.iter().enumerate() {
        rho = dl.evolve(&rho, r.t - now, 1e-3);
        now = r.t;
        for (k, want) in dl.occupations(&rho).iter().enumerate() {
            err = err.max((cols[k][i] - want).abs());
        }
        trace = trace.max((r.norm - 1.0).abs());
        odd = odd.max(r.odd_weight.unwrap_or(f64::INFINITY));
    }
    Ok((err, trace, odd))
}

fn bh_params() -> Result<ModelParams> {
    let Value::Object(mut m) = bh_model() else { unreachable!() };
    m.remove("model");
    Ok(serde_json::from_value(Value::Object(m))?)
}

fn lindblad_run(dir: &Path, scheme: &str, dt: f64, t_final: f64, record: usize) -> Result<EvolutionArtifacts> {
    run::run_lindblad(&config(json!({
        "model": bh_model(),
        "algorithm": {"lindblad": {"scheme": scheme, "dt": dt, "t_final": t_final, "max_bond": 1024}},
        "output": {"dir": dir, "record_interval": record}
    }))?)
}

fn criterion_5(tmp: &Path) -> Result<Outcome> {
    let p = bh_params()?;
    let art = lindblad_run(&tmp.join("c5"), "hybrid_trotter", 0.005, 1.0, 1)?;
    let (err, trace, odd) = lindblad_errors(&art, &p)?;
    let passed = err <= 1e-5 && trace <= 1e-8 && odd <= 1e-10;
    Ok(Outcome::new(
        passed,
        format!("{} records, max |<n_l> - exact| {err:.1e}, trace deviation {trace:.1e}, odd-q weight {odd:.1e}", art.trajectory.records.len()),
    ))
}

fn criterion_6(tmp: &Path) -> Result<Outcome> {
    let p = bh_params()?;
    let ratio = |scheme: &str, dt: f64, t: f64, every: usize| -> Result<(f64, f64, f64)> {
        let coarse = lindblad_errors(&lindblad_run(&tmp.join(format!("c6_{scheme}_a")), scheme, dt, t, every)?, &p)?.0;
        let fine = lindblad_errors(&lindblad_run(&tmp.join(format!("c6_{scheme}_b")), scheme, dt / 2.0, t, 2 * every)?, &p)?.0;
        Ok((coarse, fine, coarse / fine))
    };
    let (hc, hf, hr) = ratio("hybrid_trotter", 0.005, 1.0, 10)?;
    let (rc, rf, rr) = ratio("rk4_mpo", 0.02, 1.0, 5)?;
    Ok(Outcome::new(
        hr >= 3.5 && rr >= 12.0,
        format!("hybrid {hc:.2e} -> {hf:.2e} ratio {hr:.2} (>= 3.5); rk4 {rc:.2e} -> {rf:.2e} ratio {rr:.1} (>= 12)"),
    ))
}

fn criterion_7(tmp: &Path) -> Result<Outcome> {
    let d = 24;
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (lambda, nbar) in [(1.0, 0.75), (0.5, 0.25)] {
        for (name, initial) in [
            ("vacuum", json!({"product": [0]})),
            ("n=5", json!({"product": [5]})),
            ("random", json!({"random": {"sectors": [0, 1, 2, 3, 4, 5, 6], "bond": 1}})),
        ] {
            let t_final = 10.0 / lambda;
            let art = run::run_lindblad(&config(json!({
                "model": {"model": "lindblad_bh", "l": 1, "d": d, "j": 0.0, "u": 0.0, "lambda1": lambda, "nbar1": nbar},
                "algorithm": {"lindblad": {"scheme": "rk4_mpo", "dt": 0.01, "t_final": t_final, "max_bond": 64}},
                "initial": initial,
                "output": {"dir": tmp.join(format!("c7_{lambda}_{name}")), "record_interval": 100},
                "seed": 7
            }))?)?;
            let n = *column(&art, "n_0")?.last().context("empty trajectory")?;
            let err = (n - nbar).abs();
            worst = worst.max(err);
            parts.push(format!("{name}@{lambda}: {err:.1e}"));
        }
    }
    Ok(Outcome::new(worst <= 1e-6, format!("|<n>(10/Lambda) - nbar| {} (d={d})", parts.join(", "))))
}

fn criterion_8() -> Result<Outcome> {
    let listed = fixtures::appendix_tensors();
    let psi = fixtures::appendix_state()?;
    let mut exact = true;
    for (site, want) in psi.sites().iter().zip(&listed) {
        exact &= site.blocks() == want.blocks();
        exact &= site.legs()[1..] == want.legs()[1..];
    }
    let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let sum = AsMps::basis_state(vec![LocalSpace::spin_half(); 3], &[1, 1, 0])?
        .scale(h)
        .add(&AsMps::basis_state(vec![LocalSpace::spin_half(); 3], &[1, 0, 0])?.scale(h))?;
    let (built, _) = sum.compress(&TruncationPolicy::exact())?;
    let vec_err = max_abs_vec(&oracle::mps_to_dense(&built)?, &fixtures::appendix_vector());
    let charges_ok = built.a1_charges() == vec![Charge(1), Charge(2)] && built.bond_dims() == vec![2, 1];

    let p = ModelParams { l: 3, gamma: 0.5, delta: 1.5, ..Default::default() };
    let dense = oracle::mpo_to_dense(&mpo_xyz(&p)?)?;
    let display = oracle::appendix_xyz_mpo(0.5, 1.5);
    let display_err = frobenius_diff(&dense, &display);
    let shifted_err = frobenius_diff(&(dense + linalg::identity(8)), &display);

    let b0 = mpo_xyz(&ModelParams { gamma: 0.0, ..p.clone() })?.b1_charges();
    let b1 = mpo_xyz(&p)?.b1_charges();
    let b_ok = b0 == vec![Charge(0)] && b1 == vec![Charge(-2), Charge(0), Charge(2)];

    let passed = exact && vec_err <= 1e-14 && charges_ok && display_err <= 1e-12 && b_ok;
    Ok(Outcome::new(
        passed,
        format!(
            "M1-M3 blocks exact: {exact}; built state err {vec_err:.1e}, a_1 {{1,2}}: {charges_ok}; \
             |dense(mpo_xyz) - display| {display_err:.3e} (tol 1e-12), |dense + 1 - display| {shifted_err:.1e}; b_1 sets: {b_ok}"
        ),
    ))
}

fn frobenius_diff(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    linalg::frobenius(&(a - b))
}

fn max_abs_vec(a: &Array1<C64>, b: &Array1<C64>) -> f64 {
    (a - b).iter().map(|x| x.norm()).fold(0.0, f64::max)
}

fn criterion_9(tmp: &Path) -> Result<Outcome> {
    let read = |p: &Path| std::fs::read(p).with_context(|| format!("reading {}", p.display()));
    let mut same = Vec::new();
    for (name, file, cfg) in [
        (
            "gs",
            run::SECTORS_FILE,
            json!({"model": xyz_model(8, 0.5), "algorithm": {"gs": {"max_bond": 32}}, "seed": 11}),
        ),
        (
            "quench",
            "trajectory.csv",
            json!({
                "model": xyz_model(6, 0.5),
                "algorithm": {"quench": {"dt": 0.01, "n_steps": 20, "max_bond": 16}},
                "initial": {"random": {"sectors": [3], "bond": 4}},
                "seed": 11
            }),
        ),
        (
            "lindblad",
            "trajectory.csv",
            json!({"model": bh_model(), "algorithm": {"lindblad": {"dt": 0.01, "n_steps": 20, "max_bond": 64}}, "seed": 11}),
        ),
    ] {
        let mut outputs = Vec::new();
        for run_ix in 0..2 {
            let mut v = cfg.clone();
            v["output"] = json!({"dir": tmp.join(format!("c9_{name}_{run_ix}")), "record_interval": 1});
            let c = config(v)?;
            let dir = match name {
                "gs" => run::run_gs(&c)?.dir,
                "quench" => run::run_quench(&c)?.dir,
                _ => run::run_lindblad(&c)?.dir,
            };
            outputs.push(read(&dir.join(file))?);
        }
        ensure!(!outputs[0].is_empty(), "{name} wrote an empty {file}");
        same.push((name, outputs[0] == outputs[1]));
    }
    let passed = same.iter().all(|s| s.1);
    let summary = same.iter().map(|(n, s)| format!("{n}: {}", if *s { "identical" } else { "DIFFERENT" })).collect::<Vec<_>>().join(", ");
    Ok(Outcome::new(passed, summary))
}

fn main() -> ExitCode {
    let tmp = tempfile::tempdir().expect("temp dir");
    let dir = tmp.path();
    let criteria: Vec<(&str, Box<dyn Fn() -> Result<Outcome>>)> = vec![
        ("fusion/dense equivalence", Box::new(criterion_1)),
        ("DMRG against exact diagonalization", Box::new(|| criterion_2(dir))),
        ("ground-state sector structure", Box::new(|| criterion_3(dir))),
        ("quench against exact evolution", Box::new(|| criterion_4(dir))),
        ("Lindblad hybrid against dense", Box::new(|| criterion_5(dir))),
        ("convergence orders", Box::new(|| criterion_6(dir))),
        ("single-site thermalization", Box::new(|| criterion_7(dir))),
        ("example fixtures", Box::new(criterion_8)),
        ("determinism", Box::new(|| criterion_9(dir))),
    ];
    let mut unexpected = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let n = i + 1;
        let start = Instant::now();
        let outcome = run().unwrap_or_else(|e| Outcome::new(false, format!("error: {e:#}")));
        let secs = start.elapsed().as_secs_f64();
        let known = KNOWN_FAILURES.iter().find(|k| k.0 == n);
        let verdict = if outcome.passed { "PASS" } else { "FAIL" };
        println!("criterion {n} {verdict} {name}: {} [{secs:.1}s]", outcome.summary);
        match (outcome.passed, known) {
            (false, Some((_, why))) => println!("    known failure: {why}"),
            (false, None) => unexpected += 1,
            _ => {}
        }
    }
    if unexpected > 0 {
        println!("{unexpected} criteria failed unexpectedly");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
