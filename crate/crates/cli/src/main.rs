use std::path::{Path, PathBuf};
use std::process::ExitCode;

use adaptmps_cli::{config::ExperimentConfig, init_threads, run, validate, Fault, Level};
use anyhow::Result;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "adaptmps", version, about = "Adaptive-symmetry MPS experiments")]
struct Cli {
    /// Cap on worker threads (overridden by ADAPTMPS_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ground-state search: energy.json, pn.csv, state.json.
    Gs { config: PathBuf },
    /// Closed-system quench: trajectory.csv, trajectory.json, state.json.
    Quench { config: PathBuf },
    /// Driven-dissipative evolution: trajectory.csv, trajectory.json, state.json.
    Lindblad { config: PathBuf },
    /// Oracle-equivalence and invariant suites; prints a JSON report.
    Validate {
        #[arg(long, value_enum, default_value = "fast")]
        level: Level,
        /// Inject a known defect to exercise the suites.
        #[arg(long, value_enum)]
        inject_fault: Option<Fault>,
        /// Also write the report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<bool> {
    init_threads(cli.threads)?;
    match cli.command {
        Command::Gs { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let out = run::run_gs_with_progress(&cfg, |r| {
                eprintln!("sweep {:>3}  E = {:.12}  D = {:>4}  discarded = {:.2e}", r.sweep, r.energy, r.max_bond, r.discarded_weight)
            })?;
            println!("{}", serde_json::to_string(&serde_json::json!({
                "E": out.report.energy,
                "sweeps": out.report.sweeps,
                "max_bond": out.report.max_bond,
                "converged": out.report.converged,
                "dir": out.dir,
            }))?);
            Ok(true)
        }
        Command::Quench { config } => evolution(&config, run::run_quench),
        Command::Lindblad { config } => evolution(&config, run::run_lindblad),
        Command::Validate { level, inject_fault, report } => {
            let r = validate::run_validate(level, inject_fault);
            let text = serde_json::to_string_pretty(&r)?;
            if let Some(path) = report {
                std::fs::write(path, text.clone() + "\n")?;
            }
            println!("{text}");
            Ok(r.passed)
        }
    }
}

fn evolution(config: &Path, f: fn(&ExperimentConfig) -> Result<run::EvolutionArtifacts>) -> Result<bool> {
    let cfg = ExperimentConfig::load(config)?;
    let out = f(&cfg)?;
    let meta = &out.trajectory.meta;
    println!("{}", serde_json::to_string(&serde_json::json!({
        "steps": meta.n_steps,
        "records": out.trajectory.records.len(),
        "cumulative_truncation": meta.cumulative_truncation,
        "final_max_bond": meta.final_max_bond,
        "csv": out.csv_path(),
    }))?);
    Ok(true)
}
