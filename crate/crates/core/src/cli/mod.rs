//! Experiment runner behind the `aggregative` binary.

pub mod config;
pub mod experiments;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::{ExperimentConfig, GameKind, Population};
pub use experiments::{
    build_instance, compare, compare_rows, run, sweep_instances, sweep_m, sweep_m_rows, verify_file,
    CompareRow, Failure, Instance, RunOutcome, SweepRow,
};

use crate::algorithms::Algorithm;
use crate::error::Error;

#[derive(Debug, Parser)]
#[command(name = "aggregative", about = "Nash and Wardrop equilibria of aggregative games")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub algorithm: Option<String>,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long = "max-iter", global = true)]
    pub max_iter: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one game and verify the result.
    Run,
    /// Nash/Wardrop distance for every M of the list.
    SweepM,
    /// Update counts of several algorithms.
    Compare,
    /// Verify a stored equilibrium of the configured game.
    Verify {
        equilibrium: PathBuf,
        /// Multipliers; defaults to duals.csv next to the equilibrium.
        #[arg(long)]
        duals: Option<PathBuf>,
    },
}

impl Cli {
    /// Loads the config and applies the command-line overrides.
    pub fn experiment(&self) -> Result<ExperimentConfig, Error> {
        let path = self
            .config
            .as_ref()
            .ok_or_else(|| Error::Config("--config is required".into()))?;
        let mut cfg = ExperimentConfig::load(path)?;
        if let Some(s) = self.seed {
            cfg.seed = s;
            cfg.solver.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.output_dir = o.clone();
        }
        if let Some(a) = &self.algorithm {
            let alg = Algorithm::parse(a).ok_or_else(|| Error::Config(format!("unknown algorithm '{a}'")))?;
            cfg.algorithm = alg;
            cfg.flavor = alg.flavor();
        }
        if let Some(t) = self.tol {
            cfg.solver.tol = t;
        }
        if let Some(k) = self.max_iter {
            cfg.solver.max_iter = k;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Runs the command line; returns the process exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    execute(&cli)
}

pub fn execute(cli: &Cli) -> i32 {
    let cfg = match cli.experiment() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("configuration error: {e}");
            return 2;
        }
    };
    let outcome = match &cli.command {
        Command::Run => run(&cfg).map(|o| {
            println!(
                "{}: M = {}, {} iterations, converged = {}, epsilon-Nash = {:.3e}",
                cfg.algorithm.name(),
                o.result.x.m(),
                o.result.iterations,
                o.result.converged,
                o.report.epsilon_nash
            );
        }),
        Command::SweepM => sweep_m(&cfg).map(|rows| {
            let failed = rows.iter().filter(|r| r.error.is_some() || !r.converged).count();
            println!("{} rows written, {failed} failed", rows.len());
        }),
        Command::Compare => compare(&cfg).map(|rows| println!("{} rows written", rows.len())),
        Command::Verify { equilibrium, duals } => {
            verify_file(&cfg, equilibrium, duals.as_deref()).map(|r| {
                println!(
                    "feasible = {}, stationarity = {:.3e}, epsilon-Nash = {:.3e}",
                    r.feasible, r.kkt_stationarity, r.epsilon_nash
                );
            })
        }
    };
    match outcome {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("{f}");
            f.exit_code()
        }
    }
}
