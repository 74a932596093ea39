//! Experiment configuration file.
//!
//! The file is flat `key = value` text (TOML syntax). Every key is
//! optional; anything left out keeps its default. Unknown keys are
//! rejected. See the repository README for the full key table.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::channel::PerCurve;
use crate::engine::SimConfig;
use crate::error::{ConfigError, Error};
use crate::traffic::TrafficMode;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Per-run settings. `mode` and `itsg5_fraction` are overwritten for
    /// every sweep point.
    pub sim: SimConfig,
    pub mix_fractions: Vec<f64>,
    pub modes: Vec<TrafficMode>,
    pub runs: usize,
    pub master_seed: u64,
    pub out_dir: PathBuf,
    /// Concurrent runs; 0 uses every core.
    pub jobs: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            sim: SimConfig::default(),
            mix_fractions: vec![1.0, 0.75, 0.5, 0.25, 0.0],
            modes: vec![TrafficMode::Standard, TrafficMode::Constrained],
            runs: 20,
            master_seed: 1,
            out_dir: PathBuf::from("out"),
            jobs: 0,
        }
    }
}

impl ExperimentConfig {
    /// Every problem with the configuration, not just the first.
    pub fn errors(&self) -> Vec<ConfigError> {
        let mut errors = Vec::new();
        self.sim.collect_errors(&mut errors);
        if self.mix_fractions.is_empty() {
            errors.push(ConfigError::OutOfRange { key: "mix_fractions", message: "must not be empty".into() });
        }
        for f in &self.mix_fractions {
            if !(0.0..=1.0).contains(f) {
                errors.push(ConfigError::OutOfRange {
                    key: "mix_fractions",
                    message: format!("{f} is outside [0, 1]"),
                });
            }
        }
        if self.modes.is_empty() {
            errors.push(ConfigError::OutOfRange { key: "modes", message: "must not be empty".into() });
        }
        if self.runs < 1 {
            errors.push(ConfigError::OutOfRange { key: "runs", message: "must be >= 1".into() });
        }
        errors
    }

    pub fn validate(&self) -> Result<(), Error> {
        let errors = self.errors();
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errors))
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    // road
    length_m: Option<f64>,
    lanes_per_direction: Option<usize>,
    lane_width_m: Option<f64>,
    density_veh_per_km: Option<f64>,
    speed_mps: Option<f64>,
    // link budget
    tx_power_dbm: Option<f64>,
    tx_gain_db: Option<f64>,
    rx_gain_db: Option<f64>,
    noise_figure_db: Option<f64>,
    bandwidth_hz: Option<f64>,
    carrier_ghz: Option<f64>,
    effective_antenna_height_m: Option<f64>,
    min_distance_m: Option<f64>,
    shadowing_sigma_db: Option<f64>,
    shadowing_decorr_m: Option<f64>,
    itsg5_per_curve: Option<PathBuf>,
    ltev2x_per_curve: Option<PathBuf>,
    // ITS-G5
    aifs_us: Option<u64>,
    slot_us: Option<u64>,
    cw_max_slots: Option<u32>,
    cca_threshold_dbm: Option<f64>,
    preamble_detection: Option<bool>,
    preamble_detect_dbm: Option<f64>,
    mcs_data_rate_bps: Option<f64>,
    // LTE-V2X
    keep_probability: Option<f64>,
    sensing_threshold_dbm: Option<f64>,
    reselection_min: Option<u32>,
    reselection_max: Option<u32>,
    best_fraction: Option<f64>,
    subchannel_size_rb: Option<u32>,
    // traffic
    payload_bytes: Option<usize>,
    base_period_ms: Option<f64>,
    itsg5_jitter_ms: Option<f64>,
    per_packet_jitter: Option<bool>,
    // engine
    warm_up_s: Option<f64>,
    measure_s: Option<f64>,
    mobility_update_ms: Option<f64>,
    relevance_margin_db: Option<f64>,
    // results
    bin_width_m: Option<f64>,
    max_distance_m: Option<f64>,
    // sweep
    mix_fractions: Option<Vec<f64>>,
    modes: Option<Vec<String>>,
    runs: Option<usize>,
    master_seed: Option<u64>,
    out_dir: Option<PathBuf>,
    jobs: Option<usize>,
}

macro_rules! apply {
    ($file:ident, $target:expr, $($key:ident),+ $(,)?) => {
        $( if let Some(v) = $file.$key { $target.$key = v; } )+
    };
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

/// Parses configuration text. Relative PER-curve paths resolve against
/// `base_dir`.
pub fn parse_config(text: &str, base_dir: &Path) -> Result<ExperimentConfig, Error> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| line_of(text, s.start)).unwrap_or(0);
        ConfigError::Parse { line, message: e.message().to_string() }
    })?;

    let mut cfg = ExperimentConfig::default();
    let mut errors = Vec::new();
    let sim = &mut cfg.sim;
    apply!(file, sim.road, length_m, lanes_per_direction, lane_width_m, density_veh_per_km, speed_mps);
    apply!(
        file,
        sim.link,
        tx_power_dbm,
        tx_gain_db,
        rx_gain_db,
        noise_figure_db,
        bandwidth_hz,
        carrier_ghz,
        effective_antenna_height_m,
        min_distance_m
    );
    if let Some(v) = file.shadowing_sigma_db {
        sim.shadowing.sigma_db = v;
    }
    if let Some(v) = file.shadowing_decorr_m {
        sim.shadowing.decorr_m = v;
    }
    for (path, slot) in [(&file.itsg5_per_curve, &mut sim.per_itsg5), (&file.ltev2x_per_curve, &mut sim.per_ltev2x)] {
        if let Some(p) = path {
            match PerCurve::from_csv(&base_dir.join(p)) {
                Ok(c) => *slot = c,
                Err(Error::Config(mut es)) => errors.append(&mut es),
                Err(other) => errors.push(ConfigError::PerCurve(other.to_string())),
            }
        }
    }
    apply!(file, sim.csma, aifs_us, slot_us, cw_max_slots, cca_threshold_dbm, mcs_data_rate_bps);
    if let Some(v) = file.preamble_detect_dbm {
        sim.csma.preamble_detect_dbm = Some(v);
    }
    if file.preamble_detection == Some(false) {
        sim.csma.preamble_detect_dbm = None;
    }
    apply!(
        file,
        sim.sps,
        keep_probability,
        sensing_threshold_dbm,
        reselection_min,
        reselection_max,
        best_fraction,
        subchannel_size_rb
    );
    apply!(file, sim.traffic, payload_bytes, base_period_ms, itsg5_jitter_ms, per_packet_jitter);
    apply!(file, sim, warm_up_s, measure_s, mobility_update_ms, relevance_margin_db);
    apply!(file, sim.histogram, bin_width_m, max_distance_m);
    apply!(file, cfg, mix_fractions, runs, master_seed, out_dir, jobs);
    if let Some(modes) = file.modes {
        let mut parsed = Vec::new();
        for m in modes {
            match m.parse::<TrafficMode>() {
                Ok(mode) => parsed.push(mode),
                Err(message) => errors.push(ConfigError::OutOfRange { key: "modes", message }),
            }
        }
        cfg.modes = parsed;
    }

    errors.extend(cfg.errors());
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::Config(errors))
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text, path.parent().unwrap_or(Path::new(".")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentConfig, Error> {
        parse_config(text, Path::new("."))
    }

    fn config_errors(r: Result<ExperimentConfig, Error>) -> Vec<ConfigError> {
        match r {
            Err(Error::Config(es)) => es,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = parse("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.sim.road.density_veh_per_km, 61.5);
        assert_eq!(cfg.sim.link.tx_power_dbm, 23.0);
        assert_eq!(cfg.sim.csma.cca_threshold_dbm, -65.0);
        assert_eq!(cfg.sim.sps.keep_probability, 0.5);
        assert_eq!(cfg.runs, 20);
    }

    #[test]
    fn overrides_apply() {
        let cfg = parse("density_veh_per_km = 62.5\nmodes = [\"constrained\"]\nmix_fractions = [0.5]\n").unwrap();
        assert_eq!(cfg.sim.road.density_veh_per_km, 62.5);
        assert_eq!(cfg.modes, vec![TrafficMode::Constrained]);
        assert_eq!(cfg.mix_fractions, vec![0.5]);
    }

    #[test]
    fn preamble_detection_can_be_switched_off() {
        assert_eq!(parse("").unwrap().sim.csma.preamble_detect_dbm, Some(-85.0));
        assert_eq!(parse("preamble_detect_dbm = -82.0").unwrap().sim.csma.preamble_detect_dbm, Some(-82.0));
        assert_eq!(parse("preamble_detection = false").unwrap().sim.csma.preamble_detect_dbm, None);
    }

    #[test]
    fn out_of_range_mix_rejected() {
        let es = config_errors(parse("mix_fractions = [2.0]"));
        assert!(matches!(es[0], ConfigError::OutOfRange { key: "mix_fractions", .. }));
    }

    #[test]
    fn range_errors_listed_exhaustively() {
        let es = config_errors(parse("runs = 0\nkeep_probability = 1.5\nmix_fractions = [-1.0, 0.5, 3.0]\n"));
        assert_eq!(es.len(), 4, "{es:?}");
    }

    #[test]
    fn unknown_key_reports_line() {
        let es = config_errors(parse("runs = 3\n\nwarp_factor = 9\n"));
        match &es[0] {
            ConfigError::Parse { line, message } => {
                assert_eq!(*line, 3);
                assert!(message.contains("warp_factor"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn syntax_error_reports_line() {
        let es = config_errors(parse("runs = 3\nmeasure_s = = 2\n"));
        assert!(matches!(es[0], ConfigError::Parse { line: 2, .. }), "{es:?}");
    }

    #[test]
    fn per_curve_paths_resolve_relative_to_file() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("its.csv"), "sinr_db,per\n0,0.5\n5,0\n").unwrap();
        let cfg_path = dir.path().join("exp.toml");
        std::fs::write(&cfg_path, "itsg5_per_curve = \"its.csv\"\n").unwrap();
        let cfg = load_config(&cfg_path).unwrap();
        assert_eq!(cfg.sim.per_itsg5.points(), &[(0.0, 0.5), (5.0, 0.0)]);
    }
}
