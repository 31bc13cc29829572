//! Command-line front end: simulate, sweep, meanfield, bounds, couple.

mod analysis;
mod config;
mod couple;
mod simulate;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "cpas", version, about = "Contact process with asymptomatic and symptomatic infection")]
struct Cli {
    /// TOML file with top-level defaults and per-subcommand sections.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one exact simulation and write its density trajectory.
    Simulate(simulate::SimulateArgs),
    /// Estimate survival probability over a parameter grid.
    Sweep(sweep::SweepArgs),
    /// Integrate the mean-field equations and classify fixed points.
    Meanfield(analysis::MeanfieldArgs),
    /// Evaluate branching and percolation bounds.
    Bounds(analysis::BoundsArgs),
    /// Run or check a monotone coupling.
    Couple(couple::CoupleArgs),
}

const EXIT_ERROR: u8 = 1;
const EXIT_BREAKS: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = cli.config.as_deref();
    let result = match cli.command {
        Command::Simulate(a) => simulate::run(a, config).map(|_| ExitCode::SUCCESS),
        Command::Sweep(a) => sweep::run(a, config).map(|_| ExitCode::SUCCESS),
        Command::Meanfield(a) => analysis::run_meanfield(a, config).map(|_| ExitCode::SUCCESS),
        Command::Bounds(a) => analysis::run_bounds(a, config).map(|_| ExitCode::SUCCESS),
        Command::Couple(a) => couple::run(a, config).map(|o| match o {
            couple::Outcome::Ordered => ExitCode::SUCCESS,
            couple::Outcome::Breaks => ExitCode::from(EXIT_BREAKS),
        }),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::from(EXIT_ERROR)
    })
}
