//! CAM generation.
//!
//! In [`TrafficMode::Standard`] each ITS-G5 station draws its own period
//! around the nominal 100 ms, standing in for the speed-dependent CAM
//! triggering rules, while LTE-V2X stations use exactly 100 ms. In
//! [`TrafficMode::Constrained`] every station generates exactly every
//! 100 ms. First generation instants are independent and uniform over one
//! period in both modes.

use rand::Rng;

use crate::error::ConfigError;
use crate::{Micros, Tech};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TrafficMode {
    Standard,
    Constrained,
}

impl TrafficMode {
    pub fn label(self) -> &'static str {
        match self {
            TrafficMode::Standard => "standard",
            TrafficMode::Constrained => "constrained",
        }
    }

    pub fn tag(self) -> u8 {
        match self {
            TrafficMode::Standard => 0,
            TrafficMode::Constrained => 1,
        }
    }
}

impl std::str::FromStr for TrafficMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "standard" => Ok(TrafficMode::Standard),
            "constrained" => Ok(TrafficMode::Constrained),
            other => Err(format!("unknown traffic mode `{other}` (expected standard or constrained)")),
        }
    }
}

impl std::fmt::Display for TrafficMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrafficConfig {
    pub payload_bytes: usize,
    pub base_period_ms: f64,
    /// Half-width of the ITS-G5 period range in standard mode.
    pub itsg5_jitter_ms: f64,
    /// Redraw the ITS-G5 period for every packet instead of once per station.
    pub per_packet_jitter: bool,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        TrafficConfig { payload_bytes: 350, base_period_ms: 100.0, itsg5_jitter_ms: 5.0, per_packet_jitter: false }
    }
}

impl TrafficConfig {
    pub fn validate(&self, errors: &mut Vec<ConfigError>) {
        let mut bad = |key, message: &str| {
            errors.push(ConfigError::OutOfRange { key, message: message.to_string() })
        };
        if self.payload_bytes == 0 {
            bad("payload_bytes", "must be > 0");
        }
        if !(self.base_period_ms > 0.0) {
            bad("base_period_ms", "must be > 0");
        } else if !((self.base_period_ms * 1000.0).round() as Micros).is_multiple_of(1000) {
            bad("base_period_ms", "must be a whole number of milliseconds (LTE-V2X TTI grid)");
        }
        if !(self.itsg5_jitter_ms >= 0.0 && self.itsg5_jitter_ms < self.base_period_ms) {
            bad("itsg5_jitter_ms", "must be in [0, base_period_ms)");
        }
    }

    pub fn base_period_us(&self) -> Micros {
        ms_to_us(self.base_period_ms)
    }

    /// Longest period any station can draw.
    pub fn max_period_us(&self) -> Micros {
        ms_to_us(self.base_period_ms + self.itsg5_jitter_ms)
    }
}

fn ms_to_us(ms: f64) -> Micros {
    (ms * 1000.0).round() as Micros
}

/// Uniform in `[0, base period)`.
pub fn first_generation_time<R: Rng + ?Sized>(cfg: &TrafficConfig, rng: &mut R) -> Micros {
    rng.random_range(0..cfg.base_period_us())
}

pub fn station_period_us<R: Rng + ?Sized>(tech: Tech, mode: TrafficMode, cfg: &TrafficConfig, rng: &mut R) -> Micros {
    match (mode, tech) {
        (TrafficMode::Standard, Tech::ItsG5) if cfg.itsg5_jitter_ms > 0.0 => {
            let lo = cfg.base_period_ms - cfg.itsg5_jitter_ms;
            let hi = cfg.base_period_ms + cfg.itsg5_jitter_ms;
            ms_to_us(rng.random_range(lo..=hi))
        }
        _ => cfg.base_period_us(),
    }
}

/// A cooperative awareness message.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cam {
    pub source: usize,
    pub seq: u64,
    pub generated_us: Micros,
    pub payload_bytes: usize,
}

/// Per-vehicle CAM source.
#[derive(Debug, Clone)]
pub struct CamGenerator {
    source: usize,
    tech: Tech,
    mode: TrafficMode,
    period_us: Micros,
    next_us: Micros,
    seq: u64,
}

impl CamGenerator {
    pub fn new<R: Rng + ?Sized>(source: usize, tech: Tech, mode: TrafficMode, cfg: &TrafficConfig, rng: &mut R) -> Self {
        let next_us = first_generation_time(cfg, rng);
        let period_us = station_period_us(tech, mode, cfg, rng);
        CamGenerator { source, tech, mode, period_us, next_us, seq: 0 }
    }

    /// Replaces the period, e.g. to build a saturating source.
    pub fn with_period(mut self, period_us: Micros) -> Self {
        assert!(period_us > 0);
        self.period_us = period_us;
        self
    }

    pub fn period_us(&self) -> Micros {
        self.period_us
    }

    pub fn next_generation_us(&self) -> Micros {
        self.next_us
    }

    /// Emits the CAM due at `now` and schedules the next one.
    pub fn generate<R: Rng + ?Sized>(&mut self, now: Micros, cfg: &TrafficConfig, rng: &mut R) -> Cam {
        debug_assert_eq!(now, self.next_us);
        let cam = Cam { source: self.source, seq: self.seq, generated_us: now, payload_bytes: cfg.payload_bytes };
        self.seq += 1;
        if cfg.per_packet_jitter && self.mode == TrafficMode::Standard && self.tech == Tech::ItsG5 {
            self.period_us = station_period_us(self.tech, self.mode, cfg, rng);
        }
        self.next_us = now + self.period_us;
        cam
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use statrs::distribution::{ContinuousCDF, Uniform};

    #[test]
    fn first_generation_range_and_mean() {
        let cfg = TrafficConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let xs: Vec<Micros> = (0..10_000).map(|_| first_generation_time(&cfg, &mut rng)).collect();
        assert!(xs.iter().all(|&x| x < 100_000));
        let mean_ms = xs.iter().sum::<u64>() as f64 / xs.len() as f64 / 1000.0;
        assert!((mean_ms - 50.0).abs() < 1.0, "mean {mean_ms}");
        // consecutive draws (two vehicles) are uncorrelated
        let a: Vec<f64> = xs.iter().step_by(2).map(|&x| x as f64).collect();
        let b: Vec<f64> = xs.iter().skip(1).step_by(2).map(|&x| x as f64).collect();
        let (ma, mb) = (a.iter().sum::<f64>() / a.len() as f64, b.iter().sum::<f64>() / b.len() as f64);
        let cov: f64 = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        assert!((cov / (va * vb).sqrt()).abs() < 0.05);
    }

    #[test]
    fn periods_by_mode() {
        let cfg = TrafficConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for tech in Tech::ALL {
            assert_eq!(station_period_us(tech, TrafficMode::Constrained, &cfg, &mut rng), 100_000);
        }
        assert_eq!(station_period_us(Tech::LteV2x, TrafficMode::Standard, &cfg, &mut rng), 100_000);
        for _ in 0..1000 {
            let p = station_period_us(Tech::ItsG5, TrafficMode::Standard, &cfg, &mut rng);
            assert!((95_000..=105_000).contains(&p));
        }
    }

    #[test]
    fn standard_itsg5_periods_are_uniform_ks() {
        let cfg = TrafficConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut xs: Vec<f64> = (0..2000)
            .map(|_| station_period_us(Tech::ItsG5, TrafficMode::Standard, &cfg, &mut rng) as f64 / 1000.0)
            .collect();
        xs.sort_by(f64::total_cmp);
        let u = Uniform::new(95.0, 105.0).unwrap();
        let n = xs.len() as f64;
        let d = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = u.cdf(x);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max);
        // 5% critical value for large n
        assert!(d < 1.358 / n.sqrt(), "KS statistic {d}");
    }

    #[test]
    fn station_period_is_fixed_within_run() {
        let cfg = TrafficConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut g = CamGenerator::new(3, Tech::ItsG5, TrafficMode::Standard, &cfg, &mut rng);
        let p = g.period_us();
        let mut t = g.next_generation_us();
        let mut prev = None;
        for _ in 0..50 {
            let cam = g.generate(t, &cfg, &mut rng);
            assert_eq!(cam.payload_bytes, 350);
            assert_eq!(cam.source, 3);
            if let Some(prev) = prev {
                assert_eq!(t - prev, p);
            }
            prev = Some(t);
            t = g.next_generation_us();
        }
    }

    #[test]
    fn constrained_gaps_are_exact_and_counts_bounded() {
        let cfg = TrafficConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for tech in Tech::ALL {
            let mut g = CamGenerator::new(0, tech, TrafficMode::Constrained, &cfg, &mut rng);
            let horizon: Micros = 10_000_000;
            let mut count = 0;
            let mut last = None;
            while g.next_generation_us() < horizon {
                let t = g.next_generation_us();
                g.generate(t, &cfg, &mut rng);
                if let Some(l) = last {
                    assert_eq!(t - l, 100_000);
                }
                last = Some(t);
                count += 1;
            }
            assert!(count == 100 || count == 101);
        }
    }

    #[test]
    fn per_packet_jitter_redraws() {
        let cfg = TrafficConfig { per_packet_jitter: true, ..TrafficConfig::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut g = CamGenerator::new(0, Tech::ItsG5, TrafficMode::Standard, &cfg, &mut rng);
        let mut periods = std::collections::BTreeSet::new();
        for _ in 0..20 {
            let t = g.next_generation_us();
            g.generate(t, &cfg, &mut rng);
            periods.insert(g.period_us());
        }
        assert!(periods.len() > 1);
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("Constrained".parse::<TrafficMode>().unwrap(), TrafficMode::Constrained);
        assert!("bursty".parse::<TrafficMode>().is_err());
    }
}
