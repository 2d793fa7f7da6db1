//! Command-line runner: one JSON config per command, all outputs in a run
//! directory named after the hash of the effective config.

mod commands;
mod config;
mod error;
mod output;
mod svg;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "esc",
    version,
    about = "Uncertainty-aware conversion and classification experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Strategy comparison on a Gaussian-mixture world.
    Toyworld(CommonArgs),
    /// Draw posterior ensembles for every signal of a dataset.
    Convert(CommonArgs),
    /// Train a denoiser or a logistic classifier.
    Train(CommonArgs),
    /// Calibrate a selective-classification threshold.
    Calibrate(CommonArgs),
    /// Metrics over stored results, datasets and ensembles.
    Metrics(CommonArgs),
    /// Representative-sample selection and its quality comparison.
    Select(CommonArgs),
    /// Resample, filter and normalize signals.
    Preprocess(CommonArgs),
    /// Compare direct and X -> Y -> X cycle conversions.
    Cycle(CommonArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// JSON config file.
    #[arg(long)]
    pub config: PathBuf,
    /// Parent directory for the run directory.
    #[arg(long, default_value = "runs")]
    pub out: PathBuf,
    /// Worker threads (defaults to the number of CPUs).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Overrides the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Toyworld(_) => "toyworld",
            Command::Convert(_) => "convert",
            Command::Train(_) => "train",
            Command::Calibrate(_) => "calibrate",
            Command::Metrics(_) => "metrics",
            Command::Select(_) => "select",
            Command::Preprocess(_) => "preprocess",
            Command::Cycle(_) => "cycle",
        }
    }

    pub fn args(&self) -> &CommonArgs {
        match self {
            Command::Toyworld(a)
            | Command::Convert(a)
            | Command::Train(a)
            | Command::Calibrate(a)
            | Command::Metrics(a)
            | Command::Select(a)
            | Command::Preprocess(a)
            | Command::Cycle(a) => a,
        }
    }
}

/// Runs one command and returns its run directory.
pub fn run(cli: &Cli) -> Result<PathBuf, CliError> {
    let args = cli.command.args();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = args.workers {
        if n == 0 {
            return Err(CliError::Config("--workers must be at least 1".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| dispatch(&cli.command, args))
}

fn dispatch(command: &Command, args: &CommonArgs) -> Result<PathBuf, CliError> {
    let base = args.config.parent().unwrap_or(Path::new(".")).to_path_buf();
    match command {
        Command::Toyworld(_) => commands::toyworld::run(&load(args)?, &base, args),
        Command::Convert(_) => commands::convert::run(&load(args)?, &base, args),
        Command::Train(_) => commands::train::run(&load(args)?, &base, args),
        Command::Calibrate(_) => commands::calibrate::run(&load(args)?, &base, args),
        Command::Metrics(_) => commands::metrics::run(&load(args)?, &base, args),
        Command::Select(_) => commands::select::run(&load(args)?, &base, args),
        Command::Preprocess(_) => commands::preprocess::run(&load(args)?, &base, args),
        Command::Cycle(_) => commands::cycle::run(&load(args)?, &base, args),
    }
}

fn load<T: config::Seeded>(args: &CommonArgs) -> Result<T, CliError> {
    config::load(&args.config, args.seed)
}

/// Creates `<out>/<command>-<hash>` and writes the effective config into it.
pub(crate) fn run_dir<T: Serialize>(command: &str, config: &T, args: &CommonArgs) -> Result<PathBuf, CliError> {
    let canonical = serde_json::to_string(config).map_err(esc_core::Error::from)?;
    let digest = Sha256::digest(format!("{command}\n{canonical}").as_bytes());
    let dir = args.out.join(format!("{command}-{}", &hex::encode(digest)[..16]));
    std::fs::create_dir_all(&dir).map_err(esc_core::Error::from)?;
    output::write_json(&dir.join("config.json"), config)?;
    Ok(dir)
}
