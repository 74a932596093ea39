//! Path loss, received power and interference-free SINR against distance.
//!
//! cargo run --example link_budget

use v2x_coexist::channel::{average_sinr_db, link_rx_power_dbm, noise_floor_dbm, path_loss_db, LinkBudgetConfig, PerCurve};

fn main() {
    let link = LinkBudgetConfig::default();
    let noise = noise_floor_dbm(&link);
    let (its, lte) = (PerCurve::itsg5_default(), PerCurve::ltev2x_default());
    println!("noise floor {noise} dBm, breakpoint {:.2} m", link.breakpoint_m());
    println!("{:>7} {:>9} {:>9} {:>9} {:>9} {:>9}", "dist_m", "PL_dB", "rx_dBm", "SINR_dB", "PER_its", "PER_lte");
    for d in [3.0, 10.0, 19.0, 20.0, 50.0, 100.0, 200.0, 300.0, 400.0, 500.0] {
        let rx = link_rx_power_dbm(d, 0.0, &link);
        let sinr = average_sinr_db(rx, &[], noise);
        println!(
            "{d:>7} {:>9.2} {rx:>9.2} {sinr:>9.2} {:>9.3} {:>9.3}",
            path_loss_db(d, &link),
            its.lookup(sinr),
            lte.lookup(sinr)
        );
    }

    // an equal-power interferer overlapping half of the packet
    let rx = link_rx_power_dbm(100.0, 0.0, &link);
    let sinr = average_sinr_db(rx, &[(rx, 0.5)], noise);
    println!("\n100 m link with an equal-power interferer over half the airtime: SINR {sinr:.2} dB");
}
