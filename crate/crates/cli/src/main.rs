//! Batch entry point: load a config, run one named experiment, emit CSV
//! and JSON artifacts. Exit codes: 0 success, 2 configuration error,
//! 3 numerical failure.

mod config;
mod experiments;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{load_raw, RawConfig};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
    Io(String),
}

impl From<mesogate::Error> for CliError {
    fn from(e: mesogate::Error) -> Self {
        match &e {
            mesogate::Error::InvalidParams(_) | mesogate::Error::NonFinite(_) => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Numerical(_) => "numerical",
            CliError::Io(_) => "io",
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Numerical(m) | CliError::Io(m) => m,
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            _ => 3,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "mesogate",
    version,
    about = "Stochastic simulator for single-electron NAND/XOR logic",
    subcommand_required = true
)]
struct Cli {
    /// TOML configuration file; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the config's random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory (default: config's out_dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Energy matrix and average per-operation energy of the XOR.
    XorEnergy,
    /// Readout channel, mutual information, capacity, entropy split.
    XorMi,
    /// Genetic-algorithm search for the best information-energy ratio.
    IerOptimize,
    /// Misread probability versus supply voltage.
    ErrorSweep,
    /// Parity-circuit information, energy, and efficiency versus supply.
    ParityEfficiency,
    /// Sampled output-voltage distributions and master-equation checks.
    GillespieValidate,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::XorEnergy => "xor-energy",
            Command::XorMi => "xor-mi",
            Command::IerOptimize => "ier-optimize",
            Command::ErrorSweep => "error-sweep",
            Command::ParityEfficiency => "parity-efficiency",
            Command::GillespieValidate => "gillespie-validate",
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let raw = match &cli.config {
        Some(path) => load_raw(path)?,
        None => RawConfig::default(),
    };
    let experiment = cli.command.name();
    let mut config = raw.resolve(experiment)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
        config.ga.seed = seed;
    }
    if let Some(jobs) = cli.jobs {
        config.jobs = jobs;
    }
    if config.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.jobs)
            .build_global()
            .map_err(|e| CliError::Config(format!("--jobs: {e}")))?;
    }
    let out_dir = cli
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&config.out_dir));
    experiments::run(experiment, &config, &out_dir)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let record = serde_json::json!({
                "error": e.message(),
                "kind": e.kind(),
            });
            eprintln!("{record}");
            ExitCode::from(e.exit_code())
        }
    }
}
