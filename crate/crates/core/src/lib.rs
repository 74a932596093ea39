//! Discrete-event simulator for co-channel coexistence of ITS-G5 (CSMA/CA)
//! and sidelink LTE-V2X Mode 4 (semi-persistent scheduling) on a highway.
//!
//! The crate is organised bottom-up:
//!
//! * [`scenario`] places vehicles on the road and moves them.
//! * [`channel`] turns geometry into received power, SINR and packet error rate.
//! * [`mac::itsg5`] and [`mac::ltev2x`] are the two medium-access state machines.
//! * [`traffic`] decides when each vehicle generates a CAM.
//! * [`engine`] runs one deterministic simulation and produces a [`engine::RunLog`].
//! * [`results`] turns run logs into packet-reception-ratio tables.
//! * [`harness`] loads configuration files and runs sweeps over technology mixes.
//!
//! Runnable walkthroughs of each layer live in the crate's `examples/` directory.

// `!(x > 0.0)` range checks also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod engine;
pub mod error;
pub mod harness;
pub mod mac;
pub mod results;
pub mod rng;
pub mod scenario;
pub mod traffic;

pub use error::{ConfigError, Error};

/// Simulation time in integer microseconds.
pub type Micros = u64;

/// Radio technology fitted to a vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tech {
    ItsG5,
    LteV2x,
}

impl Tech {
    pub const ALL: [Tech; 2] = [Tech::ItsG5, Tech::LteV2x];

    pub fn label(self) -> &'static str {
        match self {
            Tech::ItsG5 => "ItsG5",
            Tech::LteV2x => "LteV2x",
        }
    }

    pub fn from_label(s: &str) -> Option<Tech> {
        match s {
            "ItsG5" => Some(Tech::ItsG5),
            "LteV2x" => Some(Tech::LteV2x),
            _ => None,
        }
    }
}

impl std::fmt::Display for Tech {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

pub(crate) fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub(crate) fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}
