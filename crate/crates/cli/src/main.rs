use std::path::PathBuf;
use std::process::ExitCode;

use bsi_cli::{execute, Mode, Overrides};
use clap::{Parser, Subcommand};

/// Sparse Bayesian reconstruction with Student-t hierarchical priors.
#[derive(Debug, Parser)]
#[command(name = "bsi", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic problem (g, H, D, f_true, v_eps_true).
    Simulate(RunArgs),
    /// Run JMAP or VBA on a problem; writes result.json and trace.csv.
    Solve(RunArgs),
    /// Check the prior toolkit's identities and limits; writes priors_report.json.
    VerifyPriors(RunArgs),
}

#[derive(Debug, clap::Args)]
struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed, overriding `seed`.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("BSI_LOG", "error")).init();
    let cli = Cli::parse();
    let (mode, args) = match cli.command {
        Command::Simulate(a) => (Mode::Simulate, a),
        Command::Solve(a) => (Mode::Solve, a),
        Command::VerifyPriors(a) => (Mode::VerifyPriors, a),
    };
    let overrides = Overrides {
        out: args.out,
        seed: args.seed,
    };
    match execute(mode, &args.config, &overrides) {
        Ok(outcome) => {
            if outcome.converged == Some(false) {
                log::warn!("solver stopped at max_iter without meeting the tolerances");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("bsi: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
