//! Configuration loading and sweeps over technology mixes and traffic modes.

mod config;
mod experiment;

pub use config::{load_config, parse_config, ExperimentConfig};
pub use experiment::{run_experiment, run_seed, ExperimentReport, PointResult, RunOptions, SUMMARY_DISTANCES_M};
