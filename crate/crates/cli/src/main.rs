//! `qcascade`: config-driven scans, simulations and analyses. Every run writes
//! its tables plus a `manifest.json` that can be fed back with `--config` to
//! reproduce the outputs.
//!
//! Exit codes: 0 success, 2 config or input error (including parameters
//! outside the spontaneous-emission regime), 3 numeric failure,
//! 4 non-convergence.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use commands::Invocation;
use config::ConfigFile;
use error::{CliError, CliResult};
use output::Format;

#[derive(Debug, Parser)]
#[command(name = "qcascade", version, about = "Quantum-cascade correlation spectroscopy scans and analyses")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON config with per-command sections; a previous manifest.json works too.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Named parameter set (see `qcascade presets`).
    #[arg(long, global = true)]
    preset: Option<String>,

    /// Seed of every random stream [default: 1].
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Worker threads [default: available cores].
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Table format [default: csv].
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// g2(0) versus filter detuning.
    ScanFilter,
    /// g2(0) versus cavity-exciton detuning with biexciton and triexciton resonances.
    ScanDetuning,
    /// Monte Carlo trajectory ensembles.
    Simulate,
    /// Coincidence-histogram analysis.
    Analyze {
        /// Two-column files `tau_ps, counts`; they replace the config's inputs.
        inputs: Vec<PathBuf>,
    },
    /// Global fit of the polariton anticrossing.
    FitAnticrossing {
        /// CSV `voltage,branch,energy[,sigma]`, energies in meV.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// List the built-in presets.
    Presets,
}

fn run(cli: Cli) -> CliResult<i32> {
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(CliError::Config("--workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("--workers: {e}")))?;
    }
    let config = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let inv = |overrides| Invocation {
        config: &config,
        preset: cli.preset.clone(),
        seed: cli.seed,
        format: cli.format,
        out: &cli.out,
        overrides,
    };
    match &cli.command {
        Command::ScanFilter => commands::SCAN_FILTER.execute(inv(None)),
        Command::ScanDetuning => commands::SCAN_DETUNING.execute(inv(None)),
        Command::Simulate => commands::SIMULATE.execute(inv(None)),
        Command::Analyze { inputs } => {
            let overrides = (!inputs.is_empty()).then(|| json!({ "inputs": inputs }));
            commands::ANALYZE.execute(inv(overrides))
        }
        Command::FitAnticrossing { data } => {
            let overrides = data.as_ref().map(|d| json!({ "data": d }));
            commands::FIT_ANTICROSSING.execute(inv(overrides))
        }
        Command::Presets => {
            for (cmd, name, about) in commands::all_presets() {
                println!("{cmd:<17} {name:<14} {about}");
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
