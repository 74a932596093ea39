//! Semi-persistent resource selection on a hand-fed sensing history: one
//! busy offset reserved by a neighbour, a band of noisy offsets, and the
//! rest quiet.
//!
//! cargo run --example sps_selection

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use v2x_coexist::mac::ltev2x::{PeriodOutcome, Rssi, SpsConfig, SpsState};

fn main() {
    let cfg = SpsConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut sps = SpsState::new(0, 100, 2, &cfg);

    let now = 1_000;
    for tti in 0..now {
        let offset = tti % 100;
        let mw = match offset {
            0..=59 => 1e-7,
            _ => 1e-10,
        };
        sps.record_rssi(tti, Rssi::Measured(mw));
    }
    sps.decode_reservation(1, now - 30, -90.0, &cfg);

    let sel = sps.select_resource(now, &cfg, &mut rng);
    let reserved: Vec<_> = sel.candidates.iter().filter(|c| c.reserved).map(|c| c.offset).collect();
    let mut best = sel.best.clone();
    best.sort_unstable();
    println!("reserved offsets: {reserved:?}");
    println!("best {} offsets: {best:?}", best.len());
    println!("chosen offset {}, next transmission in TTI {}", sel.chosen, sps.next_tx_tti(now).unwrap());

    // the counter was never drawn, so the first boundary expires at once
    let mut tti = now;
    for period in 1..=60 {
        tti += 100;
        match sps.on_period_boundary(tti, &cfg, &mut rng) {
            PeriodOutcome::Continue => {}
            PeriodOutcome::Kept => println!("period {period}: counter expired, resource kept"),
            PeriodOutcome::Reselected(s) => println!("period {period}: reselected offset {}", s.chosen),
        }
    }
}
