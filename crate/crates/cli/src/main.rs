//! `gaussglass` command-line front-end.

mod commands;
mod output;
mod settings;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use settings::{Common, FluctuationArgs, RsbArgs, ScanArgs, SumRuleArgs, VerifyArgs};

#[derive(Debug, Parser)]
#[command(name = "gaussglass", version = concat!(env!("CARGO_PKG_VERSION"), " (", env!("GAUSSGLASS_GIT_DESCRIBE"), ")"))]
#[command(about = "Closed forms, scans and Monte Carlo checks for the Gaussian spin glass")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tabulates a closed-form quantity over a (beta, lambda) grid as CSV.
    PhaseScan {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        scan: ScanArgs,
    },
    /// Replica symmetric solution, annealed pressure and shell bound at one point.
    RsEval {
        #[command(flatten)]
        common: Common,
    },
    /// Infimum of the broken replica functional, compared with the replica symmetric pressure.
    RsbEval {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        rsb: RsbArgs,
    },
    /// Quenched pressure at finite size with the bound checks.
    Quenched {
        #[command(flatten)]
        common: Common,
    },
    /// Integrates the overlap correlation system.
    Fluctuations {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: FluctuationArgs,
    },
    /// Replica symmetric sum rule residual at finite size.
    SumRule {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: SumRuleArgs,
    },
    /// Runs the acceptance suite and prints one line per criterion.
    Verify {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: VerifyArgs,
    },
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numeric(String),
}

impl From<gaussglass::Error> for CliError {
    fn from(e: gaussglass::Error) -> Self {
        use gaussglass::Error as E;
        match e {
            E::Numeric(_) | E::SingularFunctional { .. } | E::Divergence { .. } => CliError::Numeric(e.to_string()),
            E::InvalidArgument(_) | E::Domain(_) | E::DimensionMismatch { .. } => CliError::Usage(e.to_string()),
        }
    }
}

/// Whether every check of a command passed.
pub type Outcome = Result<bool, CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Numeric(msg)) => {
            eprintln!("numeric error: {msg}");
            ExitCode::from(3)
        }
    }
}
