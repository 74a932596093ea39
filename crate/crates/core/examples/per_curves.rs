//! Default PER curves, and a curve loaded from CSV.
//!
//! cargo run --example per_curves [curve.csv]

use std::path::Path;

use v2x_coexist::channel::PerCurve;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let its = PerCurve::itsg5_default();
    let lte = PerCurve::ltev2x_default();
    println!("ITS-G5 points: {:?}", its.points());
    println!("LTE-V2X points: {:?}", lte.points());
    println!("{:>8} {:>8} {:>8}", "sinr_dB", "ITS-G5", "LTE-V2X");
    for tenth in (-40..=60).step_by(5) {
        let s = tenth as f64 / 10.0;
        println!("{s:>8.1} {:>8.3} {:>8.3}", its.lookup(s), lte.lookup(s));
    }

    if let Some(path) = std::env::args().nth(1) {
        let custom = PerCurve::from_csv(Path::new(&path))?;
        println!("\n{path}: {:?}", custom.points());
    } else {
        let steeper = PerCurve::new(vec![(2.5, 1.0), (3.1, 0.1), (3.4, 0.0)])?;
        println!("\nhand-built curve at 3.0 dB: PER {:.3}", steeper.lookup(3.0));
    }
    Ok(())
}
