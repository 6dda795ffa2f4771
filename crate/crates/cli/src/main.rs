//! Command-line front end for the spline wavelet frame library.

mod cache;
mod commands;
mod config;
mod error;

use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::{
    load, BuildConfig, CheckConfig, CoeffsConfig, ConfigFlags, EndpointConfig, Layered, LpReconConfig, NormConfig,
    SweepConfig,
};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "blframe", version, about = "Battle-Lemarié spline wavelet frames")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Construct the system of order n and store it in the cache.
    Build {
        #[command(flatten)]
        flags: ConfigFlags,
        #[command(flatten)]
        cfg: BuildConfig,
    },
    /// Verify the structural invariants of a system.
    Check {
        #[command(flatten)]
        flags: ConfigFlags,
        #[command(flatten)]
        cfg: CheckConfig,
    },
    /// Frame coefficients of a test function as CSV.
    Coeffs {
        #[command(flatten)]
        flags: ConfigFlags,
        #[command(flatten)]
        cfg: CoeffsConfig,
    },
    /// Frame norm of a test function with its reference value.
    Norm {
        #[command(flatten)]
        flags: ConfigFlags,
        #[command(flatten)]
        cfg: NormConfig,
    },
    /// Frame against reference norms over a parameter grid and dilations.
    EquivSweep {
        #[command(flatten)]
        flags: ConfigFlags,
        #[command(flatten)]
        cfg: SweepConfig,
    },
    /// Endpoint Sobolev norms against the classical Sobolev norm.
    Endpoint {
        #[command(flatten)]
        flags: ConfigFlags,
        #[command(flatten)]
        cfg: EndpointConfig,
    },
    /// Littlewood-Paley reconstruction residual.
    LpRecon {
        #[command(flatten)]
        flags: ConfigFlags,
        #[command(flatten)]
        cfg: LpReconConfig,
    },
}

/// Resolves the layered config, then either dumps it or runs `action`.
fn run_with<T: Layered>(
    flags: &ConfigFlags,
    cli: T,
    action: impl FnOnce(&T) -> Result<(String, bool), CliError>,
) -> Result<(String, bool), CliError> {
    let cfg = load(flags, cli)?;
    if flags.dump_config {
        return Ok((serde_json::to_string_pretty(&cfg)? + "\n", true));
    }
    action(&cfg)
}

fn ok(text: Result<String, CliError>) -> Result<(String, bool), CliError> {
    text.map(|t| (t, true))
}

fn run(cli: Cli) -> Result<(String, bool), CliError> {
    match cli.command {
        Command::Build { flags, cfg } => run_with(&flags, cfg, |c| ok(commands::build(c))),
        Command::Check { flags, cfg } => run_with(&flags, cfg, commands::check),
        Command::Coeffs { flags, cfg } => run_with(&flags, cfg, |c| ok(commands::coeffs(c))),
        Command::Norm { flags, cfg } => run_with(&flags, cfg, |c| ok(commands::norm(c))),
        Command::EquivSweep { flags, cfg } => run_with(&flags, cfg, |c| ok(commands::equiv_sweep(c))),
        Command::Endpoint { flags, cfg } => run_with(&flags, cfg, |c| ok(commands::endpoint(c))),
        Command::LpRecon { flags, cfg } => run_with(&flags, cfg, |c| ok(commands::lp_recon(c))),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok((text, pass)) => {
            let mut out = std::io::stdout().lock();
            // A closed pipe is not worth a panic.
            let _ = out.write_all(text.as_bytes());
            if pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
