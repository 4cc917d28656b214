//! `fibrel` — scenario runner for the fiber-reinforced homogenization
//! library: effective coefficients, cell-limit verification, limit and
//! fine-scale solves, and energy-convergence comparisons.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure,
//! 4 regime refusal.
//!
//! The `--threads` flag is accepted for interface stability; all kernels
//! are single-threaded, so outputs are identical for every thread count.

mod commands;
mod config;
mod output;

use clap::{Parser, Subcommand};
use commands::SolveTarget;
use config::Scenario;
use fibrel::Error;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "fibrel", version, about = "Homogenized laws of fiber-reinforced cylinders")]
struct Cli {
    /// Scenario configuration (TOML, or JSON with a .json extension).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads. Accepted for interface stability; the numerical
    /// kernels are single-threaded, so results never depend on this value.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Seed override for randomized probes.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Allow solving in the conjectural gamma = 0 regime.
    #[arg(long, global = true, default_value_t = false)]
    allow_conjectural: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute effective coefficients and echo the regime classification.
    Coefficients,
    /// Verify the logarithmic cell-energy limits by annulus quadrature.
    CellVerify,
    /// Solve one variational problem and write fields + energy report.
    Solve {
        /// Which formulation to solve.
        #[arg(long, value_enum, default_value_t = SolveTarget::Limit)]
        which: SolveTarget,
    },
    /// Fine-scale sweep against the limit energy (convergence report).
    Compare,
    /// Classify the configured scaling family.
    Regimes,
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::Expr(_) => 2,
        Error::Conjectural(_) => 4,
        _ => 3,
    }
}

fn run(cli: &Cli) -> fibrel::Result<()> {
    if cli.threads == 0 {
        return Err(Error::Config("--threads must be at least 1".into()));
    }
    let config_path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config PATH is required".into()))?;
    let mut scenario = Scenario::load(config_path)?;
    if let Some(seed) = cli.seed {
        scenario.seed = seed;
    }
    match &cli.command {
        Command::Coefficients => commands::cmd_coefficients(&scenario, &cli.out),
        Command::CellVerify => commands::cmd_cell_verify(&scenario, &cli.out),
        Command::Solve { which } => {
            commands::cmd_solve(&scenario, *which, &cli.out, cli.allow_conjectural)
        }
        Command::Compare => commands::cmd_compare(&scenario, &cli.out, cli.allow_conjectural),
        Command::Regimes => commands::cmd_regimes(&scenario, &cli.out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
