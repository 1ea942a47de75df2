//! Command-line front end for adaptmps: experiment configs, run drivers and
//! the validation suites.

pub mod config;
pub mod run;
pub mod validate;

pub use config::{AlgorithmSpec, EvolutionSpec, ExperimentConfig, InitialSpec, ModelSpec, OutputSpec};
pub use run::{run_gs, run_lindblad, run_quench, EnergyReport, EvolutionArtifacts, GsArtifacts, SectorWeight};
pub use validate::{run_validate, Fault, Level, Report};

/// Environment variable that overrides `--threads`.
pub const THREADS_ENV: &str = "ADAPTMPS_THREADS";

/// Worker count: `ADAPTMPS_THREADS` if set and valid, else `flag`.
pub fn thread_count(flag: Option<usize>) -> Option<usize> {
    std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse().ok()).filter(|&n: &usize| n > 0).or(flag)
}

/// Cap the global rayon pool; a no-op when the count is unset.
pub fn init_threads(flag: Option<usize>) -> anyhow::Result<()> {
    if let Some(n) = thread_count(flag) {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}
