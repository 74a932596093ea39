//! Technology-mix sweep in both traffic modes, reporting the distance up to
//! which each technology keeps PRR >= 0.9.
//!
//! cargo run --release --example coexistence_sweep -- [runs] [config.toml]

use std::path::Path;

use v2x_coexist::harness::{load_config, run_experiment, ExperimentConfig, RunOptions};
use v2x_coexist::Tech;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let runs: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(10);
    let mut cfg = match args.next() {
        Some(path) => load_config(Path::new(&path))?,
        None => ExperimentConfig::default(),
    };
    let out = tempfile_dir()?;
    cfg.runs = runs;
    cfg.out_dir = out.clone();

    let report = run_experiment(&cfg, &RunOptions::default())?;
    print!("{}", report.summary());
    println!();
    println!("{:<12} {:>6} {:>14} {:>14}", "mode", "itsg5%", "ItsG5 0.9 (m)", "LteV2x 0.9 (m)");
    for p in &report.points {
        let range = |t| match p.aggregate.tech(t) {
            Some(_) => format!("{:.0}", p.aggregate.range_at_least(t, 0.9)),
            None => "-".into(),
        };
        println!(
            "{:<12} {:>6.0} {:>14} {:>14}",
            p.mode.label(),
            p.itsg5_fraction * 100.0,
            range(Tech::ItsG5),
            range(Tech::LteV2x)
        );
    }
    println!("\ntables written to {}", out.display());
    Ok(())
}

fn tempfile_dir() -> std::io::Result<std::path::PathBuf> {
    let dir = std::env::temp_dir().join(format!("v2x-coexist-sweep-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}
