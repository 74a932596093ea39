use rand::Rng;
use rand_distr::{Distribution, Normal};

/// First-order autoregressive shadowing update for one link after the pair
/// moved `moved_m` metres.
pub fn shadowing_step<R: Rng + ?Sized>(s: f64, moved_m: f64, sigma_db: f64, decorr_m: f64, rng: &mut R) -> f64 {
    if moved_m <= 0.0 {
        return s;
    }
    let rho = (-moved_m / decorr_m).exp();
    let n = Normal::new(0.0, sigma_db).expect("sigma is finite").sample(rng);
    rho * s + (1.0 - rho * rho).sqrt() * n
}

/// Symmetric per-pair log-normal shadowing in dB, stored as a packed
/// upper triangle.
#[derive(Debug, Clone)]
pub struct ShadowingField {
    n: usize,
    sigma_db: f64,
    decorr_m: f64,
    values: Vec<f64>,
}

impl ShadowingField {
    pub fn new<R: Rng + ?Sized>(n: usize, sigma_db: f64, decorr_m: f64, rng: &mut R) -> Self {
        let pairs = n * n.saturating_sub(1) / 2;
        let values = if sigma_db > 0.0 {
            let normal = Normal::new(0.0, sigma_db).expect("sigma is finite");
            (0..pairs).map(|_| normal.sample(rng)).collect()
        } else {
            vec![0.0; pairs]
        };
        ShadowingField { n, sigma_db, decorr_m, values }
    }

    /// A field with every link at 0 dB.
    pub fn zero(n: usize) -> Self {
        ShadowingField { n, sigma_db: 0.0, decorr_m: 1.0, values: vec![0.0; n * n.saturating_sub(1) / 2] }
    }

    fn index(&self, a: usize, b: usize) -> usize {
        let (i, j) = if a < b { (a, b) } else { (b, a) };
        debug_assert!(i != j && j < self.n);
        // rows 0..i hold (n-1) + (n-2) + ... + (n-i) entries
        i * (2 * self.n - i - 1) / 2 + (j - i - 1)
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        self.values[self.index(a, b)]
    }

    pub fn set(&mut self, a: usize, b: usize, value: f64) {
        let k = self.index(a, b);
        self.values[k] = value;
    }

    /// Advances every link; `moved_m[v]` is vehicle `v`'s absolute movement
    /// since the last update and a link decorrelates by the sum of both ends.
    pub fn update<R: Rng + ?Sized>(&mut self, moved_m: &[f64], rng: &mut R) {
        if self.sigma_db <= 0.0 {
            return;
        }
        debug_assert_eq!(moved_m.len(), self.n);
        let mut k = 0;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let moved = moved_m[i] + moved_m[j];
                self.values[k] = shadowing_step(self.values[k], moved, self.sigma_db, self.decorr_m, rng);
                k += 1;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_displacement_keeps_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(shadowing_step(2.5, 0.0, 3.0, 25.0, &mut rng), 2.5);
    }

    #[test]
    fn far_displacement_forgets_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 20_000;
        let xs: Vec<f64> = (0..n).map(|_| shadowing_step(50.0, 1e6, 3.0, 25.0, &mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.1, "mean {mean}");
    }

    #[test]
    fn symmetric_indexing_covers_all_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut f = ShadowingField::new(7, 3.0, 25.0, &mut rng);
        let mut seen = std::collections::HashSet::new();
        for a in 0..7 {
            for b in 0..7 {
                if a != b {
                    assert_eq!(f.get(a, b), f.get(b, a));
                    seen.insert(f.index(a, b));
                }
            }
        }
        assert_eq!(seen.len(), 21);
        f.set(5, 2, 1.25);
        assert_eq!(f.get(2, 5), 1.25);
    }

    #[test]
    fn fresh_field_has_three_db_spread() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        // 448 vehicles → 100_128 pairs
        let f = ShadowingField::new(448, 3.0, 25.0, &mut rng);
        let n = f.values.len() as f64;
        assert!(n >= 1e5);
        let mean = f.values.iter().sum::<f64>() / n;
        let std = (f.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!((std - 3.0).abs() < 0.1, "std {std}");
    }

    #[test]
    fn lag_one_decorrelation_distance_autocorrelation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let normal = Normal::new(0.0, 3.0).unwrap();
        let n = 20_000;
        let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let x = normal.sample(&mut rng);
            let y = shadowing_step(x, 25.0, 3.0, 25.0, &mut rng);
            sxy += x * y;
            sxx += x * x;
            syy += y * y;
        }
        let r = sxy / (sxx * syy).sqrt();
        assert!((r - (-1f64).exp()).abs() < 0.05, "r {r}");
    }
}
