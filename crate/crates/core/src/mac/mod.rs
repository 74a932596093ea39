//! Medium access: CSMA/CA for ITS-G5 and sensing-based SPS for LTE-V2X.

pub mod itsg5;
pub mod ltev2x;
