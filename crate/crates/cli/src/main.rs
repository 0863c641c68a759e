mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use choquard_core::Error;
use clap::{Parser, Subcommand};

use crate::commands::{Context, Outcome};
use crate::config::RunConfig;

#[derive(Parser)]
#[command(
    name = "choquard-lab",
    version,
    about = "Numerical experiments for quasilinear Choquard energies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run document
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the document)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for randomized inputs (overrides the document)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for kernel builds and sweeps
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Check the structural hypotheses on sampled points
    Verify,
    /// Sobolev, HLS and threshold constants on the unit bubble
    Constants,
    /// sup_t J^∞(t·u_ε) against c*_∞ for cut-off bubbles
    Threshold,
    /// Ground state of the limit problem with decay and localization tables
    GroundState,
    /// Translated ground state against the limit level
    Translate,
    /// J(t·u) along a ray
    EnergyCurve,
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::Json(_) | Error::Degenerate(_) | Error::Io(_) | Error::Csv(_) => {
            2
        }
        Error::Unverified(_) => 1,
        Error::Numeric(_) => 3,
    }
}

fn run(cli: &Cli) -> Result<Outcome, Error> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config FILE is required".into()))?;
    let config = RunConfig::load(path)?;
    if let Some(k) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    let out = cli
        .out
        .clone()
        .or_else(|| config.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let seed = cli.seed.unwrap_or(config.seed);
    let ctx = Context::new(config, out, seed)?;
    match cli.command {
        Command::Verify => commands::verify(&ctx),
        Command::Constants => commands::constants_cmd(&ctx),
        Command::Threshold => commands::threshold(&ctx),
        Command::GroundState => commands::ground_state(&ctx),
        Command::Translate => commands::translate(&ctx),
        Command::EnergyCurve => commands::energy_curve(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::Failed(names)) => {
            eprintln!("failed: {}", names.join("; "));
            ExitCode::from(1)
        }
        Ok(Outcome::NotConverged(msg)) => {
            eprintln!("not converged: {msg}");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
