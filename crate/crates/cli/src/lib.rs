//! Experiment runner behind the `herdlab` binary.
//!
//! Each subcommand reads an [`ExperimentConfig`] (TOML, every field optional),
//! applies the command-line overrides, runs one experiment and writes a CSV
//! table whose `#` header records the version, command, configuration hash and
//! seed. Exit codes: 0 on success, 2 on a configuration error, 3 on a runtime error.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod sensors;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::{ExperimentConfig, SensorMode};
pub use error::{CliError, EXIT_CONFIG, EXIT_RUNTIME};
pub use output::{Provenance, ResultTable};

#[derive(Debug, Parser)]
#[command(name = "herdlab", version, about = "Social-learning herding and quickest-time herding experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML experiment configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed, overriding `seed` in the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output CSV path; stdout when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Observation source, overriding `sensor` in the configuration.
    #[arg(long, global = true, value_enum)]
    pub sensor: Option<SensorMode>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Mean action, cascade frequency and cascade time over a prior grid.
    SimulateHerding,
    /// Percentage of agents not flagging under threshold policies.
    SimulateThreshold,
    /// Fit one machine per state and write the estimated observation matrix.
    TrainRbm,
    /// Sense comments and write their flags and reduced observations.
    ProbeLlm,
    /// Evaluate the structural conditions on the stopping problem.
    CheckStructure,
    /// Solve the two-state stopping problem on a belief grid.
    SolveOracle,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::SimulateHerding => "simulate-herding",
            Self::SimulateThreshold => "simulate-threshold",
            Self::TrainRbm => "train-rbm",
            Self::ProbeLlm => "probe-llm",
            Self::CheckStructure => "check-structure",
            Self::SolveOracle => "solve-oracle",
        }
    }
}

/// The configuration after command-line overrides.
pub fn effective_config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(sensor) = cli.sensor {
        config.sensor = sensor;
    }
    Ok(config)
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let config = effective_config(cli)?;
    let table = match cli.command {
        Command::SimulateHerding => commands::simulate_herding(&config)?,
        Command::SimulateThreshold => commands::simulate_threshold(&config)?,
        Command::TrainRbm => commands::train_rbm(&config)?,
        Command::ProbeLlm => commands::probe_llm(&config)?,
        Command::CheckStructure => commands::check_structure(&config)?,
        Command::SolveOracle => commands::solve_oracle(&config)?,
    };
    let provenance = Provenance { command: cli.command.name().into(), config_sha256: config.hash(), seed: config.seed };
    table.emit(cli.out.as_deref(), &provenance)
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { 0 };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("herdlab: {e}");
            e.exit_code()
        }
    }
}
