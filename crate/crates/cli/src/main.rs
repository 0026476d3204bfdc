//! `sixfilm`: simulate, reconstruct and verify the sixth-order thin-film model.
//!
//! Exit codes: 0 success, 1 configuration error, 2 positivity violation,
//! 3 unrecoverable step (and any other runtime failure).

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "sixfilm",
    version,
    about = "Sixth-order thin-film solver and verification harness"
)]
struct Cli {
    /// Recorded in the manifest; drives any randomized test-field generation.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate a configuration and write snapshots, the diagnostic series and a manifest.
    Simulate {
        config: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Reconstruct the limit velocity field from a stored trajectory.
    Reconstruct {
        config: PathBuf,
        /// Directory written by `simulate`.
        #[arg(long)]
        traj: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Snapshot index (default: last).
        #[arg(long)]
        snapshot: Option<usize>,
        /// Gauss-Legendre nodes across the film.
        #[arg(long, default_value_t = 16)]
        q: usize,
        /// Also write the approximate family member at this eps.
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Recompute diagnostics and balance residuals on a stored trajectory.
    Diagnose {
        config: PathBuf,
        #[arg(long)]
        traj: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Tabulate the linear growth rate of modes about a flat film.
    Dispersion {
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        #[arg(long, default_value_t = 1.0)]
        r: f64,
        #[arg(long, default_value_t = 1.0)]
        hbar: f64,
        /// Inclusive range `a..b` or comma list.
        #[arg(long, default_value = "1..4")]
        modes: String,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Manufactured-solution convergence studies in space and time.
    Mms {
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long, default_value_t = 32)]
        n: usize,
    },
    /// Map physical parameters to dimensionless groups and a solver config.
    Nondimensionalize {
        physical: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Weak-form residual terms over a range of eps, with fitted log-log slopes.
    SweepEps {
        config: PathBuf,
        /// Use a stored trajectory instead of integrating the config.
        #[arg(long)]
        traj: Option<PathBuf>,
        #[arg(short, long)]
        out: PathBuf,
        /// Comma-separated eps values (default 1/8 ... 1/128).
        #[arg(long)]
        eps: Option<String>,
        /// Extra randomly generated test pairs (seeded by --seed).
        #[arg(long, default_value_t = 0)]
        random_pairs: usize,
        #[arg(long, default_value_t = 16)]
        q: usize,
    },
}

fn configure_threads() {
    if let Some(n) = std::env::var("SIXFILM_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        // a second call fails harmlessly (tests may reuse the process)
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    let code = commands::dispatch(cli.command, cli.seed);
    ExitCode::from(code as u8)
}
