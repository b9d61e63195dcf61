//! Command-line front end for the `flattop` design pipeline.

pub mod commands;
pub mod config;
pub mod error;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands::{output_dir, Session};
use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "flattop", version, about = "Flat-top RIS beam synthesis")]
pub struct Cli {
    /// TOML run configuration; the reference design is used when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, overriding `output_dir` from the config.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Optimizer seed, overriding `optimizer.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Coupling matrix and principal eigenmode.
    Eigenmode,
    /// Binary grouping, widening vector and template phases.
    Template,
    /// Phase-only flat-top refinement.
    Optimize,
    /// Linear and planar radiation patterns.
    Pattern,
    /// Ground footprint of the planar beam.
    Footprint,
    /// DC power comparison against a constant-modulus array.
    Energy,
    /// All stages in order.
    Pipeline,
    /// Print the effective configuration as TOML.
    PrintConfig,
}

/// Loads the configuration and applies command-line overrides.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.optimizer.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    Ok(cfg)
}

/// Runs one command; returns the files written.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    let cfg = resolve_config(cli)?;
    if cli.command == Command::PrintConfig {
        print!("{}", cfg.to_toml());
        return Ok(Vec::new());
    }
    let out = output_dir(&cfg, cli.out.as_deref());
    let mut session = Session::new(cfg, out)?;
    match cli.command {
        Command::Eigenmode => session.eigenmode()?,
        Command::Template => session.template()?,
        Command::Optimize => session.optimize()?,
        Command::Pattern => session.pattern()?,
        Command::Footprint => session.footprint()?,
        Command::Energy => session.energy(None)?,
        Command::Pipeline => session.pipeline()?,
        Command::PrintConfig => unreachable!(),
    }
    Ok(session.written().to_vec())
}
