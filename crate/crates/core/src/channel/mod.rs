//! Link budget: WINNER+ B1 line-of-sight path loss, correlated shadowing,
//! thermal noise, time-averaged SINR and PER-curve reception draws.

mod per_curve;
mod shadowing;

pub use per_curve::PerCurve;
pub use shadowing::{shadowing_step, ShadowingField};

use rand::Rng;

use crate::error::ConfigError;
use crate::scenario::{distance_m, RoadConfig, Vehicle};
use crate::{dbm_to_mw, mw_to_dbm};

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, PartialEq)]
pub struct LinkBudgetConfig {
    pub tx_power_dbm: f64,
    pub tx_gain_db: f64,
    pub rx_gain_db: f64,
    pub noise_figure_db: f64,
    pub bandwidth_hz: f64,
    pub carrier_ghz: f64,
    /// Antenna height above the effective environment height, both ends.
    pub effective_antenna_height_m: f64,
    /// Distances below this are evaluated at this distance.
    pub min_distance_m: f64,
}

impl Default for LinkBudgetConfig {
    fn default() -> Self {
        LinkBudgetConfig {
            tx_power_dbm: 23.0,
            tx_gain_db: 3.0,
            rx_gain_db: 3.0,
            noise_figure_db: 6.0,
            bandwidth_hz: 10.0e6,
            carrier_ghz: 5.9,
            effective_antenna_height_m: 0.5,
            min_distance_m: 3.0,
        }
    }
}

impl LinkBudgetConfig {
    pub fn validate(&self, errors: &mut Vec<ConfigError>) {
        let mut bad = |key, message: &str| {
            errors.push(ConfigError::OutOfRange { key, message: message.to_string() })
        };
        if !(self.bandwidth_hz > 0.0) {
            bad("bandwidth_hz", "must be > 0");
        }
        if !(self.carrier_ghz > 0.0) {
            bad("carrier_ghz", "must be > 0");
        }
        if !(self.effective_antenna_height_m > 0.0) {
            bad("effective_antenna_height_m", "must be > 0");
        }
        if !(self.min_distance_m > 0.0) {
            bad("min_distance_m", "must be > 0");
        }
    }

    /// Two-slope model breakpoint, `4 h' h' f / c`.
    pub fn breakpoint_m(&self) -> f64 {
        let h = self.effective_antenna_height_m;
        4.0 * h * h * self.carrier_ghz * 1e9 / SPEED_OF_LIGHT
    }
}

/// WINNER+ B1 LOS path loss in dB.
pub fn path_loss_db(d_m: f64, cfg: &LinkBudgetConfig) -> f64 {
    let d = d_m.max(cfg.min_distance_m);
    let f_term = (cfg.carrier_ghz / 5.0).log10();
    if d <= cfg.breakpoint_m() {
        22.7 * d.log10() + 41.0 + 20.0 * f_term
    } else {
        let h = cfg.effective_antenna_height_m.log10();
        40.0 * d.log10() + 9.45 - 17.3 * h - 17.3 * h + 2.7 * f_term
    }
}

/// Received power for a link of the given length and shadowing offset.
pub fn link_rx_power_dbm(d_m: f64, shadow_db: f64, cfg: &LinkBudgetConfig) -> f64 {
    cfg.tx_power_dbm + cfg.tx_gain_db + cfg.rx_gain_db - path_loss_db(d_m, cfg) - shadow_db
}

pub fn rx_power_dbm(
    tx: &Vehicle,
    rx: &Vehicle,
    road: &RoadConfig,
    cfg: &LinkBudgetConfig,
    shadow: &ShadowingField,
) -> f64 {
    debug_assert_ne!(tx.id, rx.id);
    link_rx_power_dbm(distance_m(tx, rx, road), shadow.get(tx.id, rx.id), cfg)
}

pub fn noise_floor_dbm(cfg: &LinkBudgetConfig) -> f64 {
    -174.0 + 10.0 * cfg.bandwidth_hz.log10() + cfg.noise_figure_db
}

/// SINR averaged over the desired packet's airtime. Each interferer is
/// `(power_dbm, overlap_fraction)` where the fraction is the share of the
/// desired airtime it overlaps.
pub fn average_sinr_db(desired_dbm: f64, interferers: &[(f64, f64)], noise_dbm: f64) -> f64 {
    let interference: f64 = interferers
        .iter()
        .map(|&(p, f)| {
            debug_assert!((0.0..=1.0).contains(&f));
            dbm_to_mw(p) * f
        })
        .sum();
    mw_to_dbm(dbm_to_mw(desired_dbm) / (dbm_to_mw(noise_dbm) + interference))
}

/// Bernoulli reception draw: success with probability `1 - per`.
pub fn decide_reception<R: Rng + ?Sized>(per: f64, rng: &mut R) -> bool {
    rng.random::<f64>() >= per
}
