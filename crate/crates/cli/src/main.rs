//! Command-line front end: spectra sweeps, crossing censuses, multifractal
//! analysis, the classical map and invariant checks, written as CSV and JSON.

mod args;
mod commands;
mod error;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{classical, crossings, fractal, sweep, verify};
use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "su2-butterfly",
    version,
    about = "Floquet spectra of the double-kicked top"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    Sweep(sweep::SweepArgs),
    Crossings(crossings::CrossingsArgs),
    Fractal(fractal::FractalArgs),
    Classical(classical::ClassicalArgs),
    Verify(verify::VerifyArgs),
}

impl Command {
    fn run_args(&self) -> &args::RunArgs {
        match self {
            Command::Sweep(a) => &a.run,
            Command::Crossings(a) => &a.run,
            Command::Fractal(a) => &a.run,
            Command::Classical(a) => &a.run,
            Command::Verify(a) => &a.run,
        }
    }
}

fn init_workers(workers: Option<usize>) -> CliResult<()> {
    if workers == Some(0) {
        return Err(CliError::config("--workers must be at least 1"));
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        pool = pool.num_threads(n);
    }
    pool.build_global()
        .map_err(|e| CliError::config(format!("cannot start worker pool: {e}")))?;
    // parallelism comes from independent tasks; kernels stay sequential so
    // that results do not depend on the worker count
    su2_butterfly::sequential_kernels();
    Ok(())
}

fn dispatch(cli: &Cli) -> CliResult<()> {
    init_workers(cli.command.run_args().workers)?;
    match &cli.command {
        Command::Sweep(a) => sweep::run(a),
        Command::Crossings(a) => crossings::run(a),
        Command::Fractal(a) => fractal::run(a),
        Command::Classical(a) => classical::run(a),
        Command::Verify(a) => verify::run(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
