//! Highway topology: vehicle placement, technology assignment and mobility.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::ConfigError;
use crate::Tech;

#[derive(Debug, Clone, PartialEq)]
pub struct RoadConfig {
    pub length_m: f64,
    pub lanes_per_direction: usize,
    pub lane_width_m: f64,
    pub density_veh_per_km: f64,
    pub speed_mps: f64,
}

impl Default for RoadConfig {
    fn default() -> Self {
        RoadConfig {
            length_m: 2000.0,
            lanes_per_direction: 3,
            lane_width_m: 4.0,
            density_veh_per_km: 61.5,
            speed_mps: 140.0 / 3.6,
        }
    }
}

impl RoadConfig {
    pub fn validate(&self, errors: &mut Vec<ConfigError>) {
        let mut bad = |key, message: &str| {
            errors.push(ConfigError::OutOfRange { key, message: message.to_string() })
        };
        if !(self.length_m > 0.0) {
            bad("length_m", "must be > 0");
        }
        if self.lanes_per_direction < 1 {
            bad("lanes_per_direction", "must be >= 1");
        }
        if !(self.lane_width_m >= 0.0) {
            bad("lane_width_m", "must be >= 0");
        }
        if !(self.density_veh_per_km > 0.0) {
            bad("density_veh_per_km", "must be > 0");
        }
        if !(self.speed_mps >= 0.0) {
            bad("speed_mps", "must be >= 0");
        }
    }

    pub fn lane_count(&self) -> usize {
        2 * self.lanes_per_direction
    }

    /// Number of vehicles on the road for this density and length.
    pub fn vehicle_count(&self) -> usize {
        (self.density_veh_per_km * self.length_m / 1000.0).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vehicle {
    pub id: usize,
    pub lane_index: usize,
    pub pos_m: f64,
    pub direction: Direction,
    pub tech: Tech,
}

impl Vehicle {
    pub fn new(id: usize, lane_index: usize, pos_m: f64, tech: Tech, road: &RoadConfig) -> Self {
        let direction = if lane_index < road.lanes_per_direction {
            Direction::Forward
        } else {
            Direction::Backward
        };
        Vehicle { id, lane_index, pos_m: pos_m.rem_euclid(road.length_m), direction, tech }
    }
}

/// Number of ITS-G5 vehicles among `n` for the requested fraction, rounding
/// half away from zero.
pub fn itsg5_count(n: usize, itsg5_fraction: f64) -> usize {
    (itsg5_fraction * n as f64).round() as usize
}

/// Places vehicles uniformly over the road and lanes and assigns technologies.
pub fn spawn<R: Rng + ?Sized>(cfg: &RoadConfig, itsg5_fraction: f64, rng: &mut R) -> Vec<Vehicle> {
    assert!((0.0..=1.0).contains(&itsg5_fraction), "itsg5_fraction must be in [0, 1]");
    let n = cfg.vehicle_count();
    let n_its = itsg5_count(n, itsg5_fraction).min(n);
    let mut techs: Vec<Tech> = (0..n).map(|i| if i < n_its { Tech::ItsG5 } else { Tech::LteV2x }).collect();
    techs.shuffle(rng);
    let lanes = cfg.lane_count();
    techs
        .into_iter()
        .enumerate()
        .map(|(id, tech)| {
            let pos = rng.random_range(0.0..cfg.length_m);
            let lane = rng.random_range(0..lanes);
            Vehicle::new(id, lane, pos, tech, cfg)
        })
        .collect()
}

/// Moves every vehicle by `speed * dt_s` along its direction, wrapping at the
/// road ends.
pub fn advance(vehicles: &mut [Vehicle], cfg: &RoadConfig, dt_s: f64) {
    debug_assert!(dt_s >= 0.0);
    let step = cfg.speed_mps * dt_s;
    for v in vehicles {
        let delta = match v.direction {
            Direction::Forward => step,
            Direction::Backward => -step,
        };
        v.pos_m = (v.pos_m + delta).rem_euclid(cfg.length_m);
        // rem_euclid can round up to exactly length_m for tiny negatives
        if v.pos_m >= cfg.length_m {
            v.pos_m = 0.0;
        }
    }
}

/// Euclidean distance on the unwrapped road, lanes at `lane_width_m` spacing.
pub fn distance_m(a: &Vehicle, b: &Vehicle, cfg: &RoadConfig) -> f64 {
    let dx = a.pos_m - b.pos_m;
    let dy = (a.lane_index as f64 - b.lane_index as f64) * cfg.lane_width_m;
    dx.hypot(dy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn road() -> RoadConfig {
        RoadConfig::default()
    }

    fn at(pos: f64, lane: usize) -> Vehicle {
        Vehicle::new(0, lane, pos, Tech::ItsG5, &road())
    }

    #[test]
    fn default_density_gives_123_vehicles() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v = spawn(&road(), 1.0, &mut rng);
        assert_eq!(v.len(), 123);
        assert!(v.iter().all(|v| v.tech == Tech::ItsG5));
    }

    #[test]
    fn half_mix_rounds_up() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let v = spawn(&road(), 0.5, &mut rng);
        let its = v.iter().filter(|v| v.tech == Tech::ItsG5).count();
        assert_eq!((its, v.len() - its), (62, 61));
    }

    #[test]
    fn spawn_counts_exhaustive() {
        for n in 0..=1000usize {
            for &f in &[0.0, 0.25, 0.5, 0.75, 1.0] {
                let expected = (f * n as f64).round() as usize;
                assert_eq!(itsg5_count(n, f), expected);
            }
        }
        // spot-check through spawn itself
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for len in [0.0001, 16.26, 1000.0, 2000.0] {
            let cfg = RoadConfig { length_m: len, ..road() };
            let v = spawn(&cfg, 0.25, &mut rng);
            let its = v.iter().filter(|v| v.tech == Tech::ItsG5).count();
            assert_eq!(its, itsg5_count(cfg.vehicle_count(), 0.25));
        }
    }

    #[test]
    fn lanes_determine_direction() {
        let r = road();
        assert_eq!(Vehicle::new(0, 2, 0.0, Tech::ItsG5, &r).direction, Direction::Forward);
        assert_eq!(Vehicle::new(0, 3, 0.0, Tech::ItsG5, &r).direction, Direction::Backward);
    }

    #[test]
    fn advance_wraps_forward() {
        let mut v = vec![at(1990.0, 0)];
        advance(&mut v, &RoadConfig { speed_mps: 38.889, ..road() }, 1.0);
        assert!((v[0].pos_m - 28.889).abs() < 1e-9);
    }

    #[test]
    fn advance_backward_and_identity() {
        let cfg = RoadConfig { speed_mps: 38.889, ..road() };
        let mut v = vec![at(100.0, 4)];
        advance(&mut v, &cfg, 0.0);
        assert_eq!(v[0].pos_m, 100.0);
        advance(&mut v, &cfg, 1.0);
        assert!((v[0].pos_m - 61.111).abs() < 1e-9);
    }

    #[test]
    fn distance_examples() {
        let r = road();
        assert_eq!(distance_m(&at(100.0, 0), &at(350.0, 0), &r), 250.0);
        assert_eq!(distance_m(&at(100.0, 0), &at(100.0, 3), &r), 12.0);
        assert!((distance_m(&at(100.0, 0), &at(130.0, 4), &r) - 34.0).abs() < 1e-12);
    }

    #[test]
    fn distance_is_not_wrapped() {
        let r = road();
        assert!((distance_m(&at(5.0, 0), &at(1995.0, 0), &r) - 1990.0).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn positions_stay_on_road(start in 0.0f64..2000.0, lane in 0usize..6, steps in proptest::collection::vec(0.0f64..50.0, 0..40)) {
            let cfg = road();
            let mut v = vec![Vehicle::new(0, lane, start, Tech::LteV2x, &cfg)];
            for dt in steps {
                advance(&mut v, &cfg, dt);
                prop_assert!(v[0].pos_m >= 0.0 && v[0].pos_m < cfg.length_m);
            }
        }

        #[test]
        fn distance_is_a_metric(
            p in proptest::collection::vec((0.0f64..2000.0, 0usize..6), 3)
        ) {
            let cfg = road();
            let vs: Vec<_> = p.iter().map(|&(x, l)| at(x, l)).collect();
            let d = |i: usize, j: usize| distance_m(&vs[i], &vs[j], &cfg);
            prop_assert_eq!(d(0, 1), d(1, 0));
            prop_assert!(d(0, 1) >= 0.0);
            prop_assert!(d(0, 2) <= d(0, 1) + d(1, 2) + 1e-9);
        }
    }
}
