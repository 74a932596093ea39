//! Loading an experiment configuration and reporting every problem at once.
//!
//! cargo run --example config_loading [experiment.toml]

use std::path::Path;

use v2x_coexist::harness::{load_config, parse_config};
use v2x_coexist::Error;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    if let Some(path) = std::env::args().nth(1) {
        let cfg = load_config(Path::new(&path))?;
        println!("{cfg:#?}");
        return Ok(());
    }

    let good = "density_veh_per_km = 62.5\nmix_fractions = [1.0, 0.5]\nmodes = [\"constrained\"]\nruns = 5\n";
    let cfg = parse_config(good, Path::new("."))?;
    println!(
        "density {} veh/km, {} vehicles, mixes {:?}, modes {:?}, runs {}",
        cfg.sim.road.density_veh_per_km,
        cfg.sim.road.vehicle_count(),
        cfg.mix_fractions,
        cfg.modes,
        cfg.runs
    );

    let bad = "runs = 0\nkeep_probability = 1.5\nmix_fractions = [2.0]\n";
    match parse_config(bad, Path::new(".")) {
        Err(Error::Config(errors)) => {
            println!("\n{} problems:", errors.len());
            for e in errors {
                println!("  {e}");
            }
        }
        other => println!("unexpected: {other:?}"),
    }

    if let Err(e) = parse_config("runs = 2\nturbo = true\n", Path::new(".")) {
        println!("\n{e}");
    }
    Ok(())
}
