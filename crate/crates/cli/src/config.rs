//! Declarative experiment description read from JSON.

use std::path::{Path, PathBuf};

use adaptmps::dmrg::DmrgOptions;
use adaptmps::models::ModelParams;
use adaptmps::tevo::{Renormalize, Scheme, DEFAULT_BLOWUP_BOUND};
use adaptmps::TruncationPolicy;
use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};

/// Model block: `{"model": "xyz" | "bose_hubbard" | "lindblad_bh", ...params}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelSpec {
    Xyz(ModelParams),
    BoseHubbard(ModelParams),
    LindbladBh(ModelParams),
}

impl ModelSpec {
    pub fn params(&self) -> &ModelParams {
        match self {
            ModelSpec::Xyz(p) | ModelSpec::BoseHubbard(p) | ModelSpec::LindbladBh(p) => p,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Xyz(_) => "xyz",
            ModelSpec::BoseHubbard(_) => "bose_hubbard",
            ModelSpec::LindbladBh(_) => "lindblad_bh",
        }
    }

    pub fn is_spin(&self) -> bool {
        matches!(self, ModelSpec::Xyz(_))
    }

    /// Total charge of a half-filled chain (`S^z_T = 0` for even spin chains).
    pub fn half_filling(&self) -> i32 {
        (self.params().l / 2) as i32
    }
}

/// Time-evolution settings shared by quench and Lindblad runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionSpec {
    /// Defaults to `rk4_mpo` for quenches and `hybrid_trotter` for Lindblad runs.
    #[serde(default)]
    pub scheme: Option<Scheme>,
    pub dt: f64,
    /// Number of steps; alternatively give `t_final`.
    #[serde(default)]
    pub n_steps: Option<usize>,
    #[serde(default)]
    pub t_final: Option<f64>,
    #[serde(default = "default_max_bond")]
    pub max_bond: usize,
    /// Relative discarded-weight tolerance per truncation.
    #[serde(default)]
    pub svd_tolerance: f64,
    #[serde(default)]
    pub renormalize: Renormalize,
    #[serde(default = "default_blowup")]
    pub blowup_bound: f64,
}

fn default_max_bond() -> usize {
    64
}

fn default_blowup() -> f64 {
    DEFAULT_BLOWUP_BOUND
}

impl EvolutionSpec {
    pub fn steps(&self) -> Result<usize> {
        match (self.n_steps, self.t_final) {
            (Some(n), None) => Ok(n),
            (None, Some(t)) => {
                let n = (t / self.dt).round();
                ensure!(n >= 1.0 && ((n * self.dt) - t).abs() <= 1e-9 * t.abs().max(1.0), "t_final {t} is not a multiple of dt {}", self.dt);
                Ok(n as usize)
            }
            (Some(_), Some(_)) => bail!("give either n_steps or t_final, not both"),
            (None, None) => bail!("one of n_steps or t_final is required"),
        }
    }

    pub fn policy(&self) -> TruncationPolicy {
        TruncationPolicy::new(self.max_bond, self.svd_tolerance)
    }
}

/// Exactly one algorithm per config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum AlgorithmSpec {
    Gs(DmrgOptions),
    Quench(EvolutionSpec),
    Lindblad(EvolutionSpec),
}

impl AlgorithmSpec {
    pub fn name(&self) -> &'static str {
        match self {
            AlgorithmSpec::Gs(_) => "gs",
            AlgorithmSpec::Quench(_) => "quench",
            AlgorithmSpec::Lindblad(_) => "lindblad",
        }
    }
}

/// Where the starting state comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    /// Basis product state given by the local charge of every site.
    Product(Vec<i32>),
    /// Ground state of another model in the total-charge sector `sector`.
    GroundStateOf {
        model: ModelSpec,
        sector: i32,
        #[serde(default)]
        dmrg: DmrgOptions,
    },
    /// A state saved by an earlier run.
    Checkpoint(PathBuf),
    /// Random state on the listed total charges at bond dimension `bond`
    /// (default `min(D, 8)`).
    Random {
        sectors: Vec<i32>,
        #[serde(default)]
        bond: Option<usize>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: PathBuf,
    /// Steps between trajectory rows.
    #[serde(default = "one")]
    pub record_interval: usize,
    /// Steps between checkpoints; 0 disables them.
    #[serde(default)]
    pub checkpoint_interval: usize,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub algorithm: AlgorithmSpec,
    #[serde(default)]
    pub initial: Option<InitialSpec>,
    pub output: OutputSpec,
    #[serde(default)]
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<ExperimentConfig> {
        let cfg: ExperimentConfig = serde_json::from_str(text).context("parsing experiment config")?;
        Ok(cfg)
    }

    /// Read a config; relative paths inside it resolve against its directory.
    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg = ExperimentConfig::from_json(&text)?;
        if let Some(base) = path.parent() {
            cfg.resolve_paths(base);
        }
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        if self.output.dir.is_relative() {
            self.output.dir = base.join(&self.output.dir);
        }
        if let Some(InitialSpec::Checkpoint(p)) = &mut self.initial {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    /// Static checks plus existence of referenced files.
    pub fn validate(&self) -> Result<()> {
        self.model.params().validate()?;
        match &self.algorithm {
            AlgorithmSpec::Gs(o) => {
                o.validate()?;
                ensure!(!matches!(self.model, ModelSpec::LindbladBh(_)), "gs needs a Hermitian model, got lindblad_bh");
            }
            AlgorithmSpec::Quench(e) => {
                check_evolution(e)?;
                ensure!(!matches!(self.model, ModelSpec::LindbladBh(_)), "quench evolves a closed model, got lindblad_bh");
            }
            AlgorithmSpec::Lindblad(e) => {
                check_evolution(e)?;
                ensure!(matches!(self.model, ModelSpec::LindbladBh(_)), "lindblad needs model lindblad_bh, got {}", self.model.name());
            }
        }
        ensure!(self.output.record_interval >= 1, "record_interval must be positive");
        match &self.initial {
            Some(InitialSpec::Product(q)) => {
                ensure!(q.len() == self.model.params().l, "product state has {} sites, model has {}", q.len(), self.model.params().l);
            }
            Some(InitialSpec::GroundStateOf { model, dmrg, .. }) => {
                model.params().validate()?;
                dmrg.validate()?;
                ensure!(!matches!(model, ModelSpec::LindbladBh(_)), "ground_state_of needs a Hermitian model");
                ensure!(model.params().l == self.model.params().l, "ground_state_of chain length differs from the model");
            }
            Some(InitialSpec::Checkpoint(p)) => {
                ensure!(p.exists(), "checkpoint {} does not exist", p.display());
            }
            Some(InitialSpec::Random { sectors, bond }) => {
                ensure!(!sectors.is_empty(), "random initial state needs at least one sector");
                ensure!(bond.is_none_or(|b| b >= 1), "random bond dimension must be positive");
            }
            None => {}
        }
        Ok(())
    }
}

fn check_evolution(e: &EvolutionSpec) -> Result<()> {
    ensure!(e.dt.is_finite() && e.dt > 0.0, "dt must be positive, got {}", e.dt);
    ensure!(e.max_bond >= 1, "max_bond must be positive");
    ensure!(e.svd_tolerance >= 0.0 && e.svd_tolerance < 1.0, "svd_tolerance must lie in [0, 1)");
    ensure!(e.blowup_bound > 0.0, "blowup_bound must be positive");
    let n = e.steps()?;
    ensure!(n >= 1, "at least one step is required");
    Ok(())
}
