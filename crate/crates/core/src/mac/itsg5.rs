//! ITS-G5 (IEEE 802.11p) broadcast CSMA/CA.
//!
//! [`CsmaState`] is a pure state machine. The engine tells it when a CAM is
//! ready, when the energy-detected channel at this station flips between
//! busy and idle, and when a previously armed timer fires; the machine
//! answers with the timer to arm next or the packet to put on air.

use rand::Rng;

use crate::error::ConfigError;
use crate::Micros;

#[derive(Debug, Clone, PartialEq)]
pub struct CsmaConfig {
    pub aifs_us: Micros,
    pub slot_us: Micros,
    /// Backoff is drawn uniformly from `0..=cw_max_slots`.
    pub cw_max_slots: u32,
    pub cca_threshold_dbm: f64,
    /// Busy level for a single decodable ITS-G5 frame. `None` leaves
    /// energy detection as the only sensing mechanism.
    pub preamble_detect_dbm: Option<f64>,
    pub mcs_data_rate_bps: f64,
}

impl Default for CsmaConfig {
    fn default() -> Self {
        CsmaConfig {
            aifs_us: 110,
            slot_us: 13,
            cw_max_slots: 15,
            cca_threshold_dbm: -65.0,
            preamble_detect_dbm: Some(-85.0),
            mcs_data_rate_bps: 6.0e6,
        }
    }
}

/// OFDM symbol duration in a 10 MHz channel.
pub const SYMBOL_US: Micros = 8;
/// Preamble plus SIGNAL field.
pub const PREAMBLE_US: Micros = 40;
const SERVICE_AND_TAIL_BITS: u64 = 22;

impl CsmaConfig {
    pub fn validate(&self, errors: &mut Vec<ConfigError>) {
        let mut bad = |key, message: &str| {
            errors.push(ConfigError::OutOfRange { key, message: message.to_string() })
        };
        if self.aifs_us == 0 {
            bad("aifs_us", "must be > 0");
        }
        if self.slot_us == 0 {
            bad("slot_us", "must be > 0");
        }
        if self.data_bits_per_symbol() == 0 {
            bad("mcs_data_rate_bps", "must carry at least one bit per 8 us symbol");
        }
    }

    pub fn data_bits_per_symbol(&self) -> u64 {
        (self.mcs_data_rate_bps * SYMBOL_US as f64 * 1e-6).round().max(0.0) as u64
    }
}

/// Energy-detection clear channel assessment.
pub fn cca_busy(total_inband_power_dbm: f64, cfg: &CsmaConfig) -> bool {
    total_inband_power_dbm >= cfg.cca_threshold_dbm
}

/// Frame duration for a payload: preamble, then whole OFDM symbols for the
/// service bits, payload and tail.
pub fn airtime_us(payload_bytes: usize, cfg: &CsmaConfig) -> Micros {
    let bits = SERVICE_AND_TAIL_BITS + 8 * payload_bytes as u64;
    PREAMBLE_US + SYMBOL_US * bits.div_ceil(cfg.data_bits_per_symbol())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Idle,
    Deferring,
    /// AIFS sensing and slot countdown in progress; a timer is armed.
    Backoff,
    Transmitting,
}

/// What the engine must do after feeding the state machine an input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action<P> {
    None,
    ArmTimer { at: Micros, token: u64 },
    Transmit(P),
}

#[derive(Debug, Clone)]
pub struct CsmaState<P> {
    phase: Phase,
    backoff_slots: Option<u32>,
    countdown_from: Micros,
    timer_at: Micros,
    token: u64,
    pending: Option<P>,
    channel_busy: bool,
}

impl<P> Default for CsmaState<P> {
    fn default() -> Self {
        CsmaState {
            phase: Phase::Idle,
            backoff_slots: None,
            countdown_from: 0,
            timer_at: 0,
            token: 0,
            pending: None,
            channel_busy: false,
        }
    }
}

impl<P> CsmaState<P> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn backoff_slots_remaining(&self) -> Option<u32> {
        self.backoff_slots
    }

    pub fn pending(&self) -> Option<&P> {
        self.pending.as_ref()
    }

    pub fn channel_busy(&self) -> bool {
        self.channel_busy
    }

    /// A new CAM is ready. Returns the superseded CAM, if one was queued,
    /// and the action to take.
    pub fn on_packet_ready(&mut self, now: Micros, packet: P, cfg: &CsmaConfig) -> (Option<P>, Action<P>) {
        let replaced = self.pending.replace(packet);
        if self.phase != Phase::Idle {
            return (replaced, Action::None);
        }
        (replaced, self.begin_access(now, cfg))
    }

    fn begin_access(&mut self, now: Micros, cfg: &CsmaConfig) -> Action<P> {
        if self.channel_busy {
            self.phase = Phase::Deferring;
            Action::None
        } else {
            self.arm(now, cfg)
        }
    }

    fn arm(&mut self, now: Micros, cfg: &CsmaConfig) -> Action<P> {
        self.phase = Phase::Backoff;
        self.countdown_from = now;
        self.token += 1;
        self.timer_at = now + cfg.aifs_us + cfg.slot_us * self.backoff_slots.unwrap_or(0) as Micros;
        Action::ArmTimer { at: self.timer_at, token: self.token }
    }

    /// The energy-detected channel state at this station changed.
    pub fn on_channel<R: Rng + ?Sized>(&mut self, now: Micros, busy: bool, cfg: &CsmaConfig, rng: &mut R) -> Action<P> {
        if busy == self.channel_busy {
            return Action::None;
        }
        self.channel_busy = busy;
        match (self.phase, busy) {
            // a countdown finishing in this same microsecond still goes ahead
            (Phase::Backoff, true) if self.timer_at > now => {
                let slots_start = self.countdown_from + cfg.aifs_us;
                if let Some(b) = self.backoff_slots.as_mut() {
                    if now > slots_start {
                        let elapsed = ((now - slots_start) / cfg.slot_us) as u32;
                        *b -= elapsed.min(*b);
                    }
                }
                self.token += 1;
                self.phase = Phase::Deferring;
                Action::None
            }
            (Phase::Deferring, false) => {
                if self.backoff_slots.is_none() {
                    self.backoff_slots = Some(rng.random_range(0..=cfg.cw_max_slots));
                }
                self.arm(now, cfg)
            }
            _ => Action::None,
        }
    }

    /// An armed timer fired. Stale tokens are ignored.
    pub fn on_timer(&mut self, token: u64) -> Action<P> {
        if self.phase != Phase::Backoff || token != self.token {
            return Action::None;
        }
        match self.pending.take() {
            Some(p) => {
                self.phase = Phase::Transmitting;
                self.backoff_slots = None;
                Action::Transmit(p)
            }
            None => {
                self.phase = Phase::Idle;
                Action::None
            }
        }
    }

    /// The station's own frame left the air. Broadcast: no ACK, no retry.
    pub fn on_transmission_complete(&mut self, now: Micros, cfg: &CsmaConfig) -> Action<P> {
        debug_assert_eq!(self.phase, Phase::Transmitting);
        self.phase = Phase::Idle;
        if self.pending.is_some() {
            self.begin_access(now, cfg)
        } else {
            Action::None
        }
    }
}
