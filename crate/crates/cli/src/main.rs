//! `mrqm`: spectra, optimization, time-domain runs, sweeps and regression
//! checks for multiresonator quantum memories.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod failure;
mod input;
mod output;
mod summary;
mod verify;

use failure::Failure;
use summary::GridSpec;

#[derive(Debug, Parser)]
#[command(name = "mrqm", version, about = "Design and verification of hybrid multiresonator quantum memories")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Global {
    /// Input document (device config, or problem file for `optimize`).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output directory (created if missing).
    #[arg(long, global = true, env = "MRQM_OUT", default_value = ".")]
    pub out: PathBuf,

    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Worker threads for multistart searches and sweeps (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// Frequency grid `lo:hi:step`, in the units of the config.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub grid: Option<GridSpec>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reflection spectrum and plateau summary of a device.
    Tf,
    /// Multistart search for a wide absorption plateau.
    Optimize {
        /// Number of random starts.
        #[arg(long, default_value_t = 50)]
        starts: usize,
        /// Evaluation budget per simplex run.
        #[arg(long, default_value_t = 200_000)]
        max_evals: usize,
    },
    /// Time-domain recording of a pulse, checked against the spectrum.
    Simulate {
        /// Override the step size from the config.
        #[arg(long)]
        dt: Option<f64>,
    },
    /// Plateau metrics along one parameter axis.
    Sweep {
        /// One of gamma, gamma_r_tilde, gamma_mini, kappa, threshold.
        #[arg(long)]
        param: String,
        /// Comma-separated values; `inf` is allowed for kappa.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
    },
    /// Regression checks of the published design (bundled fixture unless
    /// --config is given).
    Verify,
    /// Loss budget for a plateau of width 1.6 delta_unit.
    Budget {
        #[arg(long)]
        gamma_r: f64,
        #[arg(long)]
        gamma_n: f64,
        #[arg(long, default_value_t = 1.0)]
        delta: f64,
        #[arg(long, default_value_t = 1e-4)]
        target: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { code, message }) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}
