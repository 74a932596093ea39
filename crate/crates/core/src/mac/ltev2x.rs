//! Sidelink LTE-V2X Mode 4 semi-persistent scheduling.
//!
//! Every LTE node shares one global 1 ms TTI grid. A transmission uses the
//! whole band for the first 13 of the 14 OFDM symbols of its TTI; the last
//! symbol is left empty for the Tx/Rx turnaround, so even a fully loaded
//! channel is silent for 71 us at the end of every TTI.
//!
//! A resource is a TTI offset within the traffic period. Each node keeps a
//! one-second history of the average power it sensed in every TTI and the
//! reservations it decoded from neighbours' control information. On
//! reselection it drops reserved and blind candidates, ranks the rest by
//! their same-phase sensing history and picks uniformly among the best 20%.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::ConfigError;
use crate::{dbm_to_mw, mw_to_dbm, Micros};

pub const TTI_US: Micros = 1000;
/// Thirteen of fourteen symbols.
pub const OCCUPIED_US: Micros = 929;
pub const GUARD_US: Micros = TTI_US - OCCUPIED_US;

pub fn tti_of(t: Micros) -> u64 {
    t / TTI_US
}

pub fn tti_start(tti: u64) -> Micros {
    tti * TTI_US
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpsConfig {
    pub keep_probability: f64,
    /// Reservations decoded at or above this power exclude their resource.
    pub sensing_threshold_dbm: f64,
    pub reselection_min: u32,
    pub reselection_max: u32,
    /// Share of the candidate resources kept after ranking.
    pub best_fraction: f64,
    pub sensing_window_ttis: u64,
    /// Resource block pairs per subchannel. Informational: every
    /// transmission occupies all subchannels.
    pub subchannel_size_rb: u32,
    /// Adjacent PSCCH/PSSCH configuration. Informational.
    pub adjacent: bool,
}

impl Default for SpsConfig {
    fn default() -> Self {
        SpsConfig {
            keep_probability: 0.5,
            sensing_threshold_dbm: -110.0,
            reselection_min: 5,
            reselection_max: 15,
            best_fraction: 0.2,
            sensing_window_ttis: 1000,
            subchannel_size_rb: 10,
            adjacent: true,
        }
    }
}

impl SpsConfig {
    pub fn validate(&self, errors: &mut Vec<ConfigError>) {
        let mut bad = |key, message: &str| {
            errors.push(ConfigError::OutOfRange { key, message: message.to_string() })
        };
        if !(0.0..=1.0).contains(&self.keep_probability) {
            bad("keep_probability", "must be in [0, 1]");
        }
        if self.reselection_min == 0 || self.reselection_min > self.reselection_max {
            bad("reselection_min", "must satisfy 1 <= reselection_min <= reselection_max");
        }
        if !(self.best_fraction > 0.0 && self.best_fraction <= 1.0) {
            bad("best_fraction", "must be in (0, 1]");
        }
        if self.sensing_window_ttis == 0 {
            bad("sensing_window_ttis", "must be > 0");
        }
    }
}

/// One TTI's sensing sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rssi {
    /// Time-averaged power in mW.
    Measured(f64),
    /// The node was transmitting and could not sense.
    Blind,
}

/// Linear time-average of power over a window. `signals` holds
/// `(power_dbm, overlap_us)` and noise is present for the whole window.
pub fn window_average_dbm(signals: &[(f64, Micros)], window_us: Micros, noise_dbm: f64) -> f64 {
    mw_to_dbm(window_average_mw(signals.iter().map(|&(p, o)| (dbm_to_mw(p), o)), window_us, noise_dbm))
}

pub(crate) fn window_average_mw(signals: impl Iterator<Item = (f64, Micros)>, window_us: Micros, noise_dbm: f64) -> f64 {
    let energy: f64 = signals.map(|(mw, o)| mw * o as f64).sum();
    dbm_to_mw(noise_dbm) + energy / window_us as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Reservation {
    offset: u64,
    last_seen_tti: u64,
}

/// Scored candidate as seen by one resource selection.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub tti: u64,
    pub offset: u64,
    /// Mean sensed power over the same-phase history, mW. `None` when no
    /// history is available yet.
    pub score_mw: Option<f64>,
    pub blind: bool,
    pub reserved: bool,
}

/// Full record of one resource selection.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub node: usize,
    pub now_tti: u64,
    pub candidates: Vec<Candidate>,
    /// Offsets kept after ranking, best first.
    pub best: Vec<u64>,
    pub chosen: u64,
    /// Exclusion left nothing and ranking fell back to all non-blind candidates.
    pub fallback: bool,
}

/// Outcome of a period boundary.
#[derive(Debug, Clone, PartialEq)]
pub enum PeriodOutcome {
    /// Counter decremented, resource unchanged.
    Continue,
    /// Counter expired and the resource was kept.
    Kept,
    Reselected(Selection),
}

#[derive(Debug, Clone)]
pub struct SpsState {
    node: usize,
    period_ttis: u64,
    selected_offset: Option<u64>,
    reselection_counter: u32,
    history: Vec<Option<(u64, Rssi)>>,
    reservations: Vec<Option<Reservation>>,
}

impl SpsState {
    /// `node_count` bounds the node ids whose reservations can be decoded.
    pub fn new(node: usize, period_ttis: u64, node_count: usize, cfg: &SpsConfig) -> Self {
        assert!(period_ttis >= 1);
        SpsState {
            node,
            period_ttis,
            selected_offset: None,
            reselection_counter: 0,
            history: vec![None; cfg.sensing_window_ttis as usize],
            reservations: vec![None; node_count],
        }
    }

    pub fn selected_offset(&self) -> Option<u64> {
        self.selected_offset
    }

    pub fn reselection_counter(&self) -> u32 {
        self.reselection_counter
    }

    pub fn period_ttis(&self) -> u64 {
        self.period_ttis
    }

    pub fn record_rssi(&mut self, tti: u64, rssi: Rssi) {
        let len = self.history.len() as u64;
        self.history[(tti % len) as usize] = Some((tti, rssi));
    }

    pub fn rssi_at(&self, tti: u64) -> Option<Rssi> {
        let len = self.history.len() as u64;
        match self.history[(tti % len) as usize] {
            Some((t, r)) if t == tti => Some(r),
            _ => None,
        }
    }

    /// Control information from `from` heard in `tti` at `rx_dbm`.
    pub fn decode_reservation(&mut self, from: usize, tti: u64, rx_dbm: f64, cfg: &SpsConfig) {
        if from == self.node || rx_dbm < cfg.sensing_threshold_dbm {
            return;
        }
        self.reservations[from] = Some(Reservation { offset: tti % self.period_ttis, last_seen_tti: tti });
    }

    /// Whether a live reservation from another node covers `offset`.
    pub fn is_reserved(&self, offset: u64, now_tti: u64, cfg: &SpsConfig) -> bool {
        self.reservations.iter().flatten().any(|r| {
            r.offset == offset % self.period_ttis && now_tti.saturating_sub(r.last_seen_tti) < cfg.sensing_window_ttis
        })
    }

    fn candidate(&self, tti: u64, now_tti: u64, cfg: &SpsConfig) -> Candidate {
        let mut sum = 0.0;
        let mut count = 0usize;
        let mut blind = false;
        let mut lag = self.period_ttis;
        while lag <= cfg.sensing_window_ttis && lag <= tti {
            match self.rssi_at(tti - lag) {
                Some(Rssi::Measured(mw)) => {
                    sum += mw;
                    count += 1;
                }
                Some(Rssi::Blind) => blind = true,
                None => {}
            }
            lag += self.period_ttis;
        }
        let offset = tti % self.period_ttis;
        Candidate {
            tti,
            offset,
            score_mw: (count > 0).then(|| sum / count as f64),
            blind,
            reserved: self.is_reserved(offset, now_tti, cfg),
        }
    }

    /// Picks a new resource for transmissions after TTI `now_tti`.
    pub fn select_resource<R: Rng + ?Sized>(&mut self, now_tti: u64, cfg: &SpsConfig, rng: &mut R) -> Selection {
        let candidates: Vec<Candidate> = (now_tti + 1..=now_tti + self.period_ttis)
            .map(|tti| self.candidate(tti, now_tti, cfg))
            .collect();

        let mut pool: Vec<&Candidate> = candidates.iter().filter(|c| !c.blind && !c.reserved).collect();
        let mut fallback = false;
        if pool.is_empty() {
            fallback = true;
            pool = candidates.iter().filter(|c| !c.blind).collect();
        }
        if pool.is_empty() {
            pool = candidates.iter().collect();
        }

        pool.shuffle(rng);
        // unsensed candidates rank as silent
        pool.sort_by(|a, b| a.score_mw.unwrap_or(0.0).total_cmp(&b.score_mw.unwrap_or(0.0)));
        let keep = ((cfg.best_fraction * self.period_ttis as f64).ceil() as usize).max(1);
        pool.truncate(keep);
        let best: Vec<u64> = pool.iter().map(|c| c.offset).collect();
        let chosen = best[rng.random_range(0..best.len())];
        self.selected_offset = Some(chosen);

        Selection { node: self.node, now_tti, candidates, best, chosen, fallback }
    }

    fn draw_counter<R: Rng + ?Sized>(&mut self, cfg: &SpsConfig, rng: &mut R) {
        self.reselection_counter = rng.random_range(cfg.reselection_min..=cfg.reselection_max);
    }

    /// Called at each CAM generation. The first call always selects.
    pub fn on_period_boundary<R: Rng + ?Sized>(&mut self, now_tti: u64, cfg: &SpsConfig, rng: &mut R) -> PeriodOutcome {
        if self.selected_offset.is_none() {
            let sel = self.select_resource(now_tti, cfg, rng);
            self.draw_counter(cfg, rng);
            return PeriodOutcome::Reselected(sel);
        }
        self.reselection_counter = self.reselection_counter.saturating_sub(1);
        if self.reselection_counter > 0 {
            return PeriodOutcome::Continue;
        }
        let keep = rng.random::<f64>() < cfg.keep_probability;
        let outcome = if keep {
            PeriodOutcome::Kept
        } else {
            PeriodOutcome::Reselected(self.select_resource(now_tti, cfg, rng))
        };
        self.draw_counter(cfg, rng);
        outcome
    }

    /// First TTI after `now_tti` that carries this node's resource.
    pub fn next_tx_tti(&self, now_tti: u64) -> Option<u64> {
        let offset = self.selected_offset?;
        let p = self.period_ttis;
        let base = now_tti + 1;
        Some(base + (offset + p - base % p) % p)
    }
}
