use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use v2x_coexist::harness::{load_config, run_experiment, ExperimentConfig, RunOptions};
use v2x_coexist::traffic::TrafficMode;
use v2x_coexist::Error;

/// Sweep ITS-G5 / LTE-V2X technology mixes and write PRR-vs-distance tables.
#[derive(Debug, Parser)]
#[command(version)]
struct Args {
    /// Configuration file (flat key = value, see README).
    #[arg(long)]
    config: Option<PathBuf>,
    /// ITS-G5 share of vehicles, in [0, 1]. Repeatable; replaces `mix_fractions`.
    #[arg(long, value_delimiter = ',')]
    mix: Vec<f64>,
    /// Traffic mode: standard or constrained. Repeatable; replaces `modes`.
    #[arg(long, value_delimiter = ',')]
    mode: Vec<TrafficMode>,
    /// Runs per sweep point.
    #[arg(long)]
    runs: Option<usize>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Concurrent runs (0 = all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Also write the event trace of the first run of each point.
    #[arg(long)]
    verbose: bool,
}

fn build_config(args: &Args) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &args.config {
        Some(path) => load_config(path)?,
        None => ExperimentConfig::default(),
    };
    if !args.mix.is_empty() {
        cfg.mix_fractions = args.mix.clone();
    }
    if !args.mode.is_empty() {
        cfg.modes = args.mode.clone();
    }
    if let Some(r) = args.runs {
        cfg.runs = r;
    }
    if let Some(s) = args.seed {
        cfg.master_seed = s;
    }
    if let Some(o) = &args.out {
        cfg.out_dir = o.clone();
    }
    if let Some(j) = args.jobs {
        cfg.jobs = j;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cfg = match build_config(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(if matches!(e, Error::Config(_)) { 1 } else { 2 });
        }
    };
    let total = cfg.modes.len() * cfg.mix_fractions.len() * cfg.runs;
    eprintln!("{total} runs, writing to {}", cfg.out_dir.display());
    match run_experiment(&cfg, &RunOptions { verbose: args.verbose }) {
        Ok(report) => {
            print!("{}", report.summary());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if matches!(e, Error::Config(_)) { 1 } else { 2 })
        }
    }
}
