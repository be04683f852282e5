//! `dcwave` command-line driver.

mod commands;
mod config;
mod descriptor;
mod error;
mod output;

use clap::{Parser, Subcommand};
use error::CliError;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "dcwave", version, about = "Dirac–Coulomb partial waves: evaluation, verification scans, transforms and evolution")]
struct Cli {
    /// JSON config file; sections keyed by subcommand, overridden by flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for CSV/JSON files.
    #[arg(long, global = true, env = "DCWAVE_OUT_DIR", default_value = ".")]
    out: PathBuf,
    /// Worker threads (default: number of cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate ψ_k on a ρ grid (eval.csv).
    Eval(commands::eval::EvalArgs),
    /// Fit and check the pointwise envelope (envelope.json, envelope.csv).
    VerifyEnvelope(commands::envelope::EnvelopeArgs),
    /// Dyadic L² norms, slopes and constants (dyadic.json, dyadic.csv).
    VerifyDyadic(commands::dyadic::DyadicArgs),
    /// Dump the steepest-descent contour for (γ, ν, ρ) (saddle.csv, saddle.json).
    SaddleDump(commands::saddle::SaddleArgs),
    /// Relativistic Hankel transform of a data descriptor (hankel.csv, hankel.json).
    Hankel(commands::spectral::HankelArgs),
    /// Spectral evolution of a data descriptor (evolve.csv, evolve.json).
    Evolve(commands::spectral::EvolveArgs),
    /// Randomized Strichartz ratio scan (strichartz.csv, strichartz.json).
    Strichartz(commands::strichartz::StrichartzArgs),
}

fn run(cli: Cli) -> Result<Vec<PathBuf>, CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::usage("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::usage(e.to_string()))?;
    }
    let cfg = config::load(cli.config.as_deref())?;
    let mut sink = output::Sink::new(&cli.out)?;
    match &cli.command {
        Command::Eval(a) => commands::eval::run(a, &cfg, &mut sink)?,
        Command::VerifyEnvelope(a) => commands::envelope::run(a, &cfg, &mut sink)?,
        Command::VerifyDyadic(a) => commands::dyadic::run(a, &cfg, &mut sink)?,
        Command::SaddleDump(a) => commands::saddle::run(a, &cfg, &mut sink)?,
        Command::Hankel(a) => commands::spectral::run_hankel(a, &cfg, &mut sink)?,
        Command::Evolve(a) => commands::spectral::run_evolve(a, &cfg, &mut sink)?,
        Command::Strichartz(a) => commands::strichartz::run(a, &cfg, &mut sink)?,
    }
    Ok(sink.written().to_vec())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("dcwave: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
