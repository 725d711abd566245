//! Command-line front end: configuration, dispatch and result files.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use fracldp_core::Executor;
use rayon::prelude::*;

/// Errors surfaced to the user with exit code 1.
#[derive(Debug)]
pub enum AppError {
    Config(String),
    Core(fracldp_core::Error),
    Io(String),
    Usage(String),
}

impl std::fmt::Display for AppError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AppError::Config(m) => write!(f, "config error: {m}"),
            AppError::Core(e) => write!(f, "{e}"),
            AppError::Io(m) => write!(f, "io error: {m}"),
            AppError::Usage(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for AppError {}

impl From<fracldp_core::Error> for AppError {
    fn from(e: fracldp_core::Error) -> Self {
        AppError::Core(e)
    }
}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> Self {
        AppError::Io(e.to_string())
    }
}

/// Runs ensembles on a dedicated rayon pool; results stay in index order.
pub struct RayonExecutor {
    pool: rayon::ThreadPool,
}

impl RayonExecutor {
    /// `threads = 0` uses rayon's default thread count.
    pub fn new(threads: usize) -> Result<Self, AppError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| AppError::Usage(format!("cannot build thread pool: {e}")))?;
        Ok(Self { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for RayonExecutor {
    fn map_indexed<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool.install(|| (0..n).into_par_iter().map(f).collect())
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Simulate,
    Skeleton,
    Rate,
    Mc,
    Sweep,
    Lab,
    Check,
}

#[derive(Parser, Debug)]
#[command(name = "fracldp", version, about = "Large-deviation experiments for fractional stochastic reaction-diffusion equations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Subcommand, Debug)]
pub enum Sub {
    /// One sample path of the stochastic equation
    Simulate(RunArgs),
    /// Controlled deterministic dynamics
    Skeleton(RunArgs),
    /// Minimum-action rate function
    Rate(RunArgs),
    /// Rare-event probability estimate
    Mc(RunArgs),
    /// Small-noise sweep of -eps log p
    Sweep(RunArgs),
    /// Tail, weak-convergence and moment experiments
    Lab(RunArgs),
    /// Structural conditions of drift and noise
    Check(RunArgs),
}

#[derive(clap::Args, Debug, Clone)]
pub struct RunArgs {
    /// experiment configuration (TOML)
    pub config: PathBuf,
    /// overrides experiment.seed
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "fracldp-out")]
    pub out_dir: PathBuf,
    /// worker threads (0 = all cores); results do not depend on it
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

impl Sub {
    pub fn split(&self) -> (Command, &RunArgs) {
        match self {
            Sub::Simulate(a) => (Command::Simulate, a),
            Sub::Skeleton(a) => (Command::Skeleton, a),
            Sub::Rate(a) => (Command::Rate, a),
            Sub::Mc(a) => (Command::Mc, a),
            Sub::Sweep(a) => (Command::Sweep, a),
            Sub::Lab(a) => (Command::Lab, a),
            Sub::Check(a) => (Command::Check, a),
        }
    }
}

/// Exit status of a finished run.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    VerdictFail,
}

/// Loads the config, runs the command and writes the result files.
pub fn run(command: Command, args: &RunArgs) -> Result<Status, AppError> {
    let mut cfg = config::Config::load(&args.config)?;
    if let Some(seed) = args.seed {
        // TOML integers are signed 64-bit; the resolved config must round-trip
        if seed > i64::MAX as u64 {
            return Err(AppError::Usage(format!("seed {seed} exceeds {}", i64::MAX)));
        }
        cfg.experiment.seed = seed;
    }
    let exec = RayonExecutor::new(args.threads)?;
    let out = commands::dispatch(command, &cfg, &exec)?;
    let pass = out.passed();
    output::write_all(&args.out_dir, &cfg, &out, exec.threads())?;
    Ok(if pass { Status::Pass } else { Status::VerdictFail })
}
