use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use realdirac::algebra::build_eta;
use realdirac::cli_io::commands::{
    cmd_algebra_verify, cmd_convergence, cmd_dispersion, cmd_evolve, cmd_find_z, cmd_reduce_check, Report,
};
use realdirac::cli_io::RunConfig;
use realdirac::Result;

#[derive(Parser)]
#[command(name = "realdirac", version, about = "Real eight-component Dirac field on a periodic 1D lattice")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the eta algebra, the commutant and the complex structures.
    AlgebraVerify,
    /// Print a complex structure Z and its residuals.
    FindZ {
        #[arg(long, default_value_t = 0)]
        index: usize,
    },
    /// Measure free plane-wave frequencies against the mass shell.
    Dispersion {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a simulation, writing diagnostics and a final snapshot.
    Evolve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare the reduced equations with the general ones on a case-I state.
    ReduceCheck {
        #[arg(long)]
        config: PathBuf,
    },
    /// Observed convergence order of free plane-wave evolution.
    Convergence {
        #[arg(long)]
        config: PathBuf,
    },
}

fn run(command: Command) -> Result<Report> {
    let eta = build_eta();
    match command {
        Command::AlgebraVerify => Ok(cmd_algebra_verify(&eta)),
        Command::FindZ { index } => cmd_find_z(&eta, index),
        Command::Dispersion { config } => cmd_dispersion(&RunConfig::load(&config)?, &eta),
        Command::Evolve { config, out } => cmd_evolve(&RunConfig::load(&config)?, &eta, &out),
        Command::ReduceCheck { config } => cmd_reduce_check(&RunConfig::load(&config)?, &eta),
        Command::Convergence { config } => cmd_convergence(&RunConfig::load(&config)?, &eta),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(report) => {
            print!("{}", report.text);
            ExitCode::from(report.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
