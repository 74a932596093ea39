//! An ITS-G5 station next to an LTE-V2X station that transmits in every
//! subframe never finds 110 us of idle channel, because each subframe leaves
//! only a 71 us gap. Moving the LTE-V2X station out of sensing range frees
//! the ITS-G5 station again.
//!
//! cargo run --release --example csma_blocking

use v2x_coexist::engine::{SimConfig, Simulation};
use v2x_coexist::rng::Seed;
use v2x_coexist::scenario::Vehicle;
use v2x_coexist::Tech;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = SimConfig::default();
    let start = (cfg.warm_up_s * 1e6) as u64;
    let window = start..start + (cfg.measure_s * 1e6) as u64;
    println!("transmissions during the {} s measurement window:", cfg.measure_s);
    for gap_m in [20.0, 50.0, 100.0, 200.0, 400.0] {
        let vehicles = vec![
            Vehicle::new(0, 0, 800.0, Tech::ItsG5, &cfg.road),
            Vehicle::new(1, 0, 800.0 + gap_m, Tech::LteV2x, &cfg.road),
        ];
        let mut sim = Simulation::with_vehicles(&cfg, Seed::from(1), vehicles)?;
        sim.set_period(1, 1_000)?.without_shadowing().instrument(true);
        let inst = sim.run().instrumentation.expect("instrumented");
        let in_window = |starts: &[u64]| starts.iter().filter(|t| window.contains(*t)).count();
        println!(
            "{gap_m:>5} m apart: ITS-G5 frames {:>4}, LTE-V2X subframes {}",
            in_window(&inst.tx_starts[0]),
            in_window(&inst.tx_starts[1])
        );
    }
    Ok(())
}
