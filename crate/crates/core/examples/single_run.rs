//! One simulation run at a chosen technology mix, printing PRR by distance.
//!
//! cargo run --release --example single_run -- [itsg5_fraction] [standard|constrained] [seed]

use std::time::Instant;

use v2x_coexist::engine::{run, SimConfig};
use v2x_coexist::results::aggregate;
use v2x_coexist::rng::Seed;
use v2x_coexist::traffic::TrafficMode;
use v2x_coexist::Tech;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let fraction: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0.5);
    let mode: TrafficMode = args.next().map(|s| s.parse()).transpose()?.unwrap_or(TrafficMode::Standard);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1);

    let cfg = SimConfig { itsg5_fraction: fraction, mode, ..SimConfig::default() };
    let started = Instant::now();
    let log = run(&cfg, Seed::from(seed))?;
    let elapsed = started.elapsed();

    println!("{} vehicles, {:.0}% ITS-G5, {mode} traffic, {:.1} s measured in {elapsed:.2?}", log.vehicles.len(), fraction * 100.0, log.measured_s);
    for tech in Tech::ALL {
        let c = log.counters(tech);
        println!("{tech}: generated {} transmitted {} replaced {} unsent {}", c.generated, c.transmitted, c.replaced, c.unsent);
    }
    let agg = aggregate(&[log.histogram]);
    println!("{:>8} {:>8} {:>8}", "dist_m", "ItsG5", "LteV2x");
    for d in (0..500).step_by(25) {
        let cell = |t| agg.prr_at(t, d as f64).map(|p| format!("{p:.3}")).unwrap_or_else(|| "-".into());
        println!("{:>8} {:>8} {:>8}", d, cell(Tech::ItsG5), cell(Tech::LteV2x));
    }
    Ok(())
}
