//! `spherefield` command line: simulate fields, estimate variograms, benchmark samplers.
//!
//! Exit codes: 0 success, 2 invalid arguments or parameters, 1 runtime failure.

mod bench;
mod settings;
mod simulate;
mod vario;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "spherefield", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample Gaussian random fields on the sphere (or sphere × time)
    Simulate(simulate::SimulateArgs),
    /// Empirical variogram of field files, with optional model truth
    Variogram(vario::VariogramArgs),
    /// Time circulant, dense Cholesky and dense eigen samplers
    Benchmark(bench::BenchmarkArgs),
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let validation = err.chain().any(|c| {
        c.is::<settings::Invalid>()
            || c.downcast_ref::<spherefield::Error>()
                .is_some_and(|e| e.is_validation())
    });
    if validation {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(a) => simulate::run(a),
        Command::Variogram(a) => vario::run(a),
        Command::Benchmark(a) => bench::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
