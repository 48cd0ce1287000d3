//! `splitstate`: batch jobs for split-state tomography.
//!
//! Every job command reads a JSON config, writes CSV/JSON artifacts plus a
//! `manifest.json` into `--out`, and prints a one-object JSON summary on
//! stdout. Exit codes: 0 success, 2 invalid config, 3 infeasible job, 1 other.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use error::CliError;

#[derive(Parser)]
#[command(
    name = "splitstate",
    version,
    about = "Design and analysis of split-state tomography circuits"
)]
struct Cli {
    /// Worker threads for parallel trials and multi-start search.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Job {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SeededJob {
    #[command(flatten)]
    job: Job,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Independent parameter counts and minimum port number for N photons.
    Params {
        #[arg(long)]
        photons: usize,
    },
    /// Correlations of a state through a circuit.
    Simulate(Job),
    /// Multi-start phase optimization for one geometry.
    Design(SeededJob),
    /// Phase optimization over a grid of total lengths.
    Sweep(SeededJob),
    /// State estimate from measured correlations.
    Reconstruct(Job),
    /// Reconstruction fidelity under noisy correlations.
    Noise(SeededJob),
    /// Condition-number spread under phase errors.
    Tolerance(SeededJob),
}

fn run(cli: Cli) -> Result<String, CliError> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Other(e.to_string()))?;
    }
    let seeded = |j: &SeededJob| commands::load(&j.job.config).map(|l| (l, j.job.out.clone(), j.seed));
    let summary = match &cli.command {
        Command::Params { photons } => return commands::params(*photons),
        Command::Simulate(j) => commands::simulate(&commands::load(&j.config)?, &j.out),
        Command::Reconstruct(j) => commands::reconstruct_cmd(&commands::load(&j.config)?, &j.out),
        Command::Design(j) => seeded(j).and_then(|(l, out, s)| commands::design(&l, &out, s)),
        Command::Sweep(j) => seeded(j).and_then(|(l, out, s)| commands::sweep(&l, &out, s)),
        Command::Noise(j) => seeded(j).and_then(|(l, out, s)| commands::noise(&l, &out, s)),
        Command::Tolerance(j) => seeded(j).and_then(|(l, out, s)| commands::tolerance(&l, &out, s)),
    }?;
    Ok(summary.to_string())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            // help and version go to stdout, usage errors to stderr
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
