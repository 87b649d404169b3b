//! `lamplighter`: lattice animals, lamplighter return probabilities, mixture
//! spectra, eigenbases and verification suites from the command line.
//!
//! Exit codes: 0 success, 1 a verification check failed, 2 usage error,
//! 3 budget exceeded, 4 any other failure.

mod commands;
mod config;
mod error;
mod output;
mod verify;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Method;
use config::Common;
use verify::Suite;

#[derive(Parser, Debug)]
#[command(
    name = "lamplighter",
    version,
    about = "Spectra of lamplighter random walks via lattice animals"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Enumerate root-containing lattice animals (JSONL) with their cluster probabilities
    Animals,
    /// Return probabilities for n = 0..n_max by one method
    Moments {
        #[arg(long, value_enum)]
        method: Method,
    },
    /// Mixture spectral measure and its CDF as CSV
    Spectrum,
    /// Finitely supported eigenfunctions of root-containing animals (JSONL)
    Eigenbasis,
    /// Run a verification suite; exits 1 if an asserted check fails
    Verify {
        #[arg(long, value_enum)]
        suite: Suite,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Animals => commands::animals(&cli.common),
        Command::Moments { method } => commands::moments(&cli.common, method),
        Command::Spectrum => commands::spectrum(&cli.common),
        Command::Eigenbasis => commands::eigenbasis(&cli.common),
        Command::Verify { suite } => verify::run(&cli.common, suite),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
