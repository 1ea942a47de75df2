//! Ground-state, quench and Lindblad runs and their output files.

use std::fs;
use std::path::{Path, PathBuf};

use adaptmps::dmrg::{ground_state_with_progress, DmrgOptions, SweepRecord};
use adaptmps::models::{
    boson_spaces, bose_hubbard_terms, density_from_pure, density_observable, local_operator, mpo_bose_hubbard, mpo_from_terms,
    mpo_parity, mpo_xyz, spin_spaces, split_by_shift, trace_state, unitary_generator, xyz_terms, LindbladModel, ModelParams,
};
use adaptmps::netops::Checkpoint;
use adaptmps::oracle::ops;
use adaptmps::tevo::{evolve_with, EvolutionPlan, Observable, Propagator, Scheme, StateKind, Trajectory};
use adaptmps::{AsMpo, AsMps, Charge, LocalSpace, TruncationPolicy};
use anyhow::{bail, ensure, Context, Result};
use serde::Serialize;

use crate::config::{AlgorithmSpec, EvolutionSpec, ExperimentConfig, InitialSpec, ModelSpec};

pub const ENERGY_FILE: &str = "energy.json";
pub const SECTORS_FILE: &str = "pn.csv";
pub const STATE_FILE: &str = "state.json";
pub const TRAJECTORY_STEM: &str = "trajectory";
pub const CHECKPOINT_DIR: &str = "checkpoints";

/// Contents of `energy.json`.
#[derive(Clone, Debug, Serialize)]
pub struct EnergyReport {
    #[serde(rename = "E")]
    pub energy: f64,
    pub sweeps: usize,
    pub max_bond: usize,
    pub converged: bool,
    pub history: Vec<SweepRecord>,
}

/// Weight of one total-charge sector of a ground state.
#[derive(Clone, Debug, PartialEq)]
pub struct SectorWeight {
    pub charge: i32,
    /// `2N - L` for spin chains.
    pub sz_total: Option<i32>,
    pub weight: f64,
}

#[derive(Clone, Debug)]
pub struct GsArtifacts {
    pub report: EnergyReport,
    pub sectors: Vec<SectorWeight>,
    pub state: AsMps,
    pub dir: PathBuf,
}

#[derive(Clone, Debug)]
pub struct EvolutionArtifacts {
    pub trajectory: Trajectory,
    pub dir: PathBuf,
}

impl EvolutionArtifacts {
    pub fn csv_path(&self) -> PathBuf {
        self.dir.join(format!("{TRAJECTORY_STEM}.csv"))
    }
}

fn spaces_of(model: &ModelSpec) -> Vec<LocalSpace> {
    let p = model.params();
    match model {
        ModelSpec::Xyz(_) => spin_spaces(p.l),
        ModelSpec::BoseHubbard(_) | ModelSpec::LindbladBh(_) => boson_spaces(p.l, p.d),
    }
}

/// The closed-system Hamiltonian of `model`; for `lindblad_bh` the
/// Bose-Hubbard part without baths.
pub fn hamiltonian(model: &ModelSpec) -> Result<AsMpo> {
    Ok(match model {
        ModelSpec::Xyz(p) => mpo_xyz(p)?,
        ModelSpec::BoseHubbard(p) | ModelSpec::LindbladBh(p) => mpo_bose_hubbard(p)?,
    })
}

fn hamiltonian_terms(model: &ModelSpec) -> Vec<adaptmps::models::LocalTerm> {
    match model {
        ModelSpec::Xyz(p) => xyz_terms(p),
        ModelSpec::BoseHubbard(p) | ModelSpec::LindbladBh(p) => bose_hubbard_terms(p),
    }
}

/// Default DMRG trial state: random on `sector` at bond dimension `min(D, 8)`.
pub fn trial_state(model: &ModelSpec, sector: i32, max_bond: usize, seed: u64) -> Result<AsMps> {
    Ok(AsMps::random(spaces_of(model), &[Charge(sector)], max_bond.min(8), seed, false)?)
}

fn product_state(model: &ModelSpec, charges: &[i32]) -> Result<AsMps> {
    let spaces = spaces_of(model);
    let mut idx = Vec::with_capacity(charges.len());
    for (l, (&q, sp)) in charges.iter().zip(&spaces).enumerate() {
        let i = (0..sp.dim()).find(|&i| sp.charge(i) == Charge(q)).with_context(|| format!("site {l} has no state with charge {q}"))?;
        idx.push(i);
    }
    Ok(AsMps::basis_state(spaces, &idx)?)
}

fn ground_state_of(model: &ModelSpec, sector: i32, opts: &DmrgOptions, seed: u64) -> Result<AsMps> {
    let op = hamiltonian(model)?;
    let trial = trial_state(model, sector, opts.max_bond, seed)?;
    let res = ground_state_with_progress(&op, &trial, opts, |_| {})?;
    Ok(res.state.normalized())
}

fn load_checkpoint(path: &Path) -> Result<AsMps> {
    let ck = Checkpoint::load(path).with_context(|| format!("loading checkpoint {}", path.display()))?;
    Ok(ck.into_mps()?)
}

/// The pure state named by `initial`, defaulting to `fallback`.
fn pure_initial(cfg: &ExperimentConfig, target: &ModelSpec, fallback: impl FnOnce() -> Result<AsMps>) -> Result<AsMps> {
    match &cfg.initial {
        None => fallback(),
        Some(InitialSpec::Product(q)) => product_state(target, q),
        Some(InitialSpec::GroundStateOf { model, sector, dmrg }) => ground_state_of(model, *sector, dmrg, cfg.seed),
        Some(InitialSpec::Checkpoint(p)) => load_checkpoint(p),
        Some(InitialSpec::Random { sectors, bond }) => {
            let qs: Vec<Charge> = sectors.iter().map(|&q| Charge(q)).collect();
            Ok(AsMps::random(spaces_of(target), &qs, bond.unwrap_or(8), cfg.seed, false)?)
        }
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// `pn.csv`: one row per first-bond charge with its normalized weight.
pub fn write_sectors(path: &Path, sweep: usize, sectors: &[SectorWeight]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let spin = sectors.iter().any(|s| s.sz_total.is_some());
    if spin {
        w.write_record(["sweep", "n", "sz_total", "weight"])?;
    } else {
        w.write_record(["sweep", "n", "weight"])?;
    }
    for s in sectors {
        let mut row = vec![sweep.to_string(), s.charge.to_string()];
        if let Some(sz) = s.sz_total {
            row.push(sz.to_string());
        }
        row.push(format!("{:e}", s.weight));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Normalized sector distribution of a pure state.
pub fn sector_weights(model: &ModelSpec, psi: &AsMps) -> Result<Vec<SectorWeight>> {
    let split = psi.sector_split()?;
    let total = split.total_weight();
    let l = model.params().l as i32;
    Ok(split
        .weights()
        .into_iter()
        .map(|(q, w)| SectorWeight { charge: q.0, sz_total: model.is_spin().then_some(2 * q.0 - l), weight: w / total })
        .collect())
}

/// Ground-state search: writes `energy.json`, `pn.csv` and `state.json`.
pub fn run_gs(cfg: &ExperimentConfig) -> Result<GsArtifacts> {
    run_gs_with_progress(cfg, |_| {})
}

pub fn run_gs_with_progress(cfg: &ExperimentConfig, progress: impl FnMut(&SweepRecord)) -> Result<GsArtifacts> {
    cfg.validate()?;
    let AlgorithmSpec::Gs(opts) = &cfg.algorithm else { bail!("config has a {} block, gs needs a gs block", cfg.algorithm.name()) };
    let op = hamiltonian(&cfg.model)?;
    let trial = pure_initial(cfg, &cfg.model, || trial_state(&cfg.model, cfg.model.half_filling(), opts.max_bond, cfg.seed))?;
    let res = ground_state_with_progress(&op, &trial, opts, progress)?;
    let state = res.state.normalized();
    let sectors = sector_weights(&cfg.model, &state)?;
    let report = EnergyReport {
        energy: res.energy,
        sweeps: res.history.len(),
        max_bond: state.max_bond(),
        converged: res.converged,
        history: res.history,
    };
    let dir = cfg.output.dir.clone();
    fs::create_dir_all(&dir)?;
    write_json(&dir.join(ENERGY_FILE), &report)?;
    write_sectors(&dir.join(SECTORS_FILE), report.sweeps, &sectors)?;
    Checkpoint::from_mps(&state, Some(opts.policy())).save(dir.join(STATE_FILE))?;
    Ok(GsArtifacts { report, sectors, state, dir })
}

fn spin_observables(l: usize) -> Result<Vec<Observable>> {
    let sp = spin_spaces(l);
    let mut out = Vec::with_capacity(l + 1);
    for s in 0..l {
        out.push(Observable::new(format!("sz_{s}"), local_operator(&sp, s, &ops::sigma_z())?));
    }
    out.push(Observable::new("parity", mpo_parity(l)?));
    Ok(out)
}

fn boson_observables(p: &ModelParams, density: bool) -> Result<Vec<Observable>> {
    let base = boson_spaces(p.l, p.d);
    let n = ops::boson_n(p.d);
    (0..p.l)
        .map(|s| {
            let op = if density { density_observable(&base, s, &n)? } else { local_operator(&base, s, &n)? };
            Ok(Observable::new(format!("n_{s}"), op))
        })
        .collect()
}

fn plan_for(spec: &EvolutionSpec, scheme: Scheme, cfg: &ExperimentConfig) -> Result<EvolutionPlan> {
    let mut plan = EvolutionPlan::new(scheme, spec.dt, spec.steps()?, spec.policy());
    plan.renormalize = spec.renormalize;
    plan.record_interval = cfg.output.record_interval;
    plan.blowup_bound = spec.blowup_bound;
    Ok(plan)
}

fn run_plan(cfg: &ExperimentConfig, plan: &EvolutionPlan, prop: &Propagator, initial: &AsMps) -> Result<EvolutionArtifacts> {
    let dir = cfg.output.dir.clone();
    fs::create_dir_all(&dir)?;
    let every = cfg.output.checkpoint_interval;
    if every > 0 {
        fs::create_dir_all(dir.join(CHECKPOINT_DIR))?;
    }
    let policy = plan.policy;
    let ck_dir = dir.join(CHECKPOINT_DIR);
    let trajectory = evolve_with(plan, prop, initial, |step, psi| {
        if every > 0 && step % every == 0 {
            Checkpoint::from_mps(psi, Some(policy)).save(ck_dir.join(format!("step_{step:06}.json")))?;
        }
        Ok(())
    })?;
    trajectory.save(&dir, TRAJECTORY_STEM)?;
    Checkpoint::from_mps(&trajectory.final_state, Some(policy)).save(dir.join(STATE_FILE))?;
    Ok(EvolutionArtifacts { trajectory, dir })
}

/// Closed-system quench: starts from the configured state (by default the
/// ground state of the model with `gamma = 0` at half filling) and evolves
/// under the configured model. Writes `trajectory.csv`/`.json` and `state.json`.
pub fn run_quench(cfg: &ExperimentConfig) -> Result<EvolutionArtifacts> {
    cfg.validate()?;
    let AlgorithmSpec::Quench(spec) = &cfg.algorithm else { bail!("config has a {} block, quench needs a quench block", cfg.algorithm.name()) };
    let p = cfg.model.params();
    let initial = pure_initial(cfg, &cfg.model, || {
        let pre = match &cfg.model {
            ModelSpec::Xyz(p) => ModelSpec::Xyz(ModelParams { gamma: 0.0, ..p.clone() }),
            other => other.clone(),
        };
        let opts = DmrgOptions { max_bond: spec.max_bond, ..Default::default() };
        ground_state_of(&pre, cfg.model.half_filling(), &opts, cfg.seed)
    })?;
    let spaces = spaces_of(&cfg.model);
    ensure!(initial.spaces() == spaces.as_slice(), "initial state does not live on the model's local spaces");
    let scheme = spec.scheme.unwrap_or(Scheme::Rk4Mpo);
    let generator = unitary_generator(&hamiltonian_terms(&cfg.model));
    let prop = match scheme {
        Scheme::Rk4Mpo => Propagator::Rk4 { generator: mpo_from_terms(&spaces, &generator, &TruncationPolicy::exact())? },
        Scheme::HybridTrotter => {
            let (sym, asym) = split_by_shift(&spaces, &generator)?;
            Propagator::hybrid(&spaces, &sym, &asym, spec.dt)?
        }
    };
    let mut plan = plan_for(spec, scheme, cfg)?;
    plan.observables = if cfg.model.is_spin() { spin_observables(p.l)? } else { boson_observables(p, false)? };
    run_plan(cfg, &plan, &prop, &initial)
}

/// Open-system run of the driven Bose-Hubbard chain. The default initial
/// state is `|GS><GS|` of the closed chain with `N = L/2` particles.
pub fn run_lindblad(cfg: &ExperimentConfig) -> Result<EvolutionArtifacts> {
    cfg.validate()?;
    let AlgorithmSpec::Lindblad(spec) = &cfg.algorithm else { bail!("config has a {} block, lindblad needs a lindblad block", cfg.algorithm.name()) };
    let ModelSpec::LindbladBh(p) = &cfg.model else { bail!("lindblad needs model lindblad_bh") };
    let base = boson_spaces(p.l, p.d);
    let model = LindbladModel::bose_hubbard(p)?;
    let closed = ModelSpec::BoseHubbard(p.clone());
    let rho = match &cfg.initial {
        Some(InitialSpec::Checkpoint(path)) => load_checkpoint(path)?,
        _ => {
            let psi = pure_initial(cfg, &closed, || {
                let opts = DmrgOptions { max_bond: spec.max_bond, ..Default::default() };
                ground_state_of(&closed, closed.half_filling(), &opts, cfg.seed)
            })?;
            density_from_pure(&psi.normalized())?
        }
    };
    ensure!(rho.spaces() == model.spaces.as_slice(), "initial density operator does not live on the vectorized spaces");
    let scheme = spec.scheme.unwrap_or(Scheme::HybridTrotter);
    let prop = match scheme {
        Scheme::Rk4Mpo => Propagator::Rk4 { generator: model.generator_mpo(&TruncationPolicy::exact())? },
        Scheme::HybridTrotter => {
            let (sym, local) = model.hybrid_parts()?;
            Propagator::hybrid(&model.spaces, &sym, &local, spec.dt)?
        }
    };
    let mut plan = plan_for(spec, scheme, cfg)?;
    plan.kind = StateKind::Density { identity: trace_state(&base)? };
    plan.observables = boson_observables(p, true)?;
    run_plan(cfg, &plan, &prop, &rho)
}
