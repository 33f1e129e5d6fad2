use std::fmt;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kramers_core::{Error, QuadratureSpec};

mod commands;
mod manifest;

const TOL_VAR: &str = "KRAMERS_QUAD_TOL";

/// Velocity slip of a Fermi gas: series coefficients, Knudsen-layer
/// profiles and a discrete-ordinates cross-check.
#[derive(Parser)]
#[command(name = "kramers", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Tabulate T_n(k), L(k) and phi0(k).
    Kernels(commands::KernelsArgs),
    /// Slip coefficients, slip velocity and K_v.
    Slip(commands::SlipArgs),
    /// Mass-velocity profile U(x)/G_v.
    Profile(commands::ProfileArgs),
    /// Discrete-ordinates solution of the half-space problem.
    Oracle(commands::OracleArgs),
    /// Slip velocity by series order against the oracle.
    Convergence(commands::ConvergenceArgs),
}

/// Bad input caught after argument parsing.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn quad_spec() -> anyhow::Result<QuadratureSpec> {
    let spec = match std::env::var(TOL_VAR) {
        Ok(v) => {
            let tol: f64 = v.trim().parse().map_err(|_| Usage(format!("{TOL_VAR}={v} is not a number")))?;
            QuadratureSpec::default().with_tolerance(tol)
        }
        Err(_) => QuadratureSpec::default(),
    };
    spec.validate().map_err(|e| Usage(e.to_string()))?;
    Ok(spec)
}

fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if cause.is::<Usage>() {
            return 2;
        }
        if let Some(err) = cause.downcast_ref::<Error>() {
            return match err {
                Error::Io(_) => 4,
                Error::InvalidInput(_) | Error::InvalidAccommodation(_) => 2,
                _ => 3,
            };
        }
        if cause.is::<std::io::Error>() {
            return 4;
        }
    }
    3
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match &cli.cmd {
        Cmd::Kernels(a) => commands::kernels(a, &quad_spec()?),
        Cmd::Slip(a) => commands::slip(a, &quad_spec()?),
        Cmd::Profile(a) => commands::profile(a, &quad_spec()?),
        Cmd::Oracle(a) => commands::oracle(a),
        Cmd::Convergence(a) => commands::convergence(a, &quad_spec()?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
