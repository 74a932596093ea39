use std::path::Path;

use serde::Deserialize;

use crate::error::{ConfigError, Error};

/// Packet error rate as a function of average SINR, piecewise linear in the
/// (dB, PER) plane. Below the first point PER is 1, above the last it is 0.
#[derive(Debug, Clone, PartialEq)]
pub struct PerCurve {
    points: Vec<(f64, f64)>,
}

#[derive(Deserialize)]
struct Row {
    sinr_db: f64,
    per: f64,
}

impl PerCurve {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self, ConfigError> {
        if points.is_empty() {
            return Err(ConfigError::PerCurve("curve has no points".into()));
        }
        for (i, &(s, p)) in points.iter().enumerate() {
            if !s.is_finite() || !(0.0..=1.0).contains(&p) {
                return Err(ConfigError::PerCurve(format!("point {i} ({s}, {p}) out of range")));
            }
            if i > 0 {
                let (s0, p0) = points[i - 1];
                if s <= s0 {
                    return Err(ConfigError::PerCurve(format!("sinr_db not strictly increasing at point {i}")));
                }
                if p > p0 {
                    return Err(ConfigError::PerCurve(format!("per increases at point {i}")));
                }
            }
        }
        Ok(PerCurve { points })
    }

    /// Three-point curve through `(anchor - 2, 0.9)`, `(anchor, 0.1)`,
    /// `(anchor + 1, 0.01)`.
    pub fn anchored(anchor_db: f64) -> Self {
        PerCurve::new(vec![(anchor_db - 2.0, 0.9), (anchor_db, 0.1), (anchor_db + 1.0, 0.01)])
            .expect("anchored curve is valid")
    }

    /// ITS-G5, MCS 2 (QPSK 1/2): PER 0.1 at 3.1 dB.
    pub fn itsg5_default() -> Self {
        Self::anchored(3.1)
    }

    /// LTE-V2X, MCS 4 (QPSK ~0.33): PER 0.1 at 0.1 dB.
    pub fn ltev2x_default() -> Self {
        Self::anchored(0.1)
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn lookup(&self, sinr_db: f64) -> f64 {
        let pts = &self.points;
        if sinr_db < pts[0].0 {
            return 1.0;
        }
        let last = pts[pts.len() - 1];
        if sinr_db > last.0 {
            return 0.0;
        }
        if sinr_db == last.0 {
            return last.1;
        }
        // first index whose sinr exceeds the query; pts[i-1] <= query < pts[i]
        let i = pts.partition_point(|&(s, _)| s <= sinr_db);
        let (s0, p0) = pts[i - 1];
        let (s1, p1) = pts[i];
        p0 + (p1 - p0) * (sinr_db - s0) / (s1 - s0)
    }

    /// Reads a `sinr_db,per` CSV file.
    pub fn from_csv(path: &Path) -> Result<Self, Error> {
        let mut reader = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
        let headers = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
        if headers.iter().collect::<Vec<_>>() != ["sinr_db", "per"] {
            return Err(ConfigError::PerCurve(format!(
                "{}: header must be `sinr_db,per`",
                path.display()
            ))
            .into());
        }
        let mut points = Vec::new();
        for row in reader.deserialize::<Row>() {
            let row = row.map_err(|e| Error::csv(path, e))?;
            points.push((row.sinr_db, row.per));
        }
        PerCurve::new(points).map_err(|e| match e {
            ConfigError::PerCurve(m) => ConfigError::PerCurve(format!("{}: {m}", path.display())).into(),
            other => other.into(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Write;

    #[test]
    fn table_anchors() {
        assert_eq!(PerCurve::itsg5_default().lookup(3.1), 0.1);
        assert_eq!(PerCurve::ltev2x_default().lookup(0.1), 0.1);
        assert_eq!(PerCurve::itsg5_default().lookup(60.0), 0.0);
        assert_eq!(PerCurve::itsg5_default().lookup(-60.0), 1.0);
    }

    #[test]
    fn interpolates_between_points() {
        let c = PerCurve::new(vec![(0.0, 1.0), (10.0, 0.0)]).unwrap();
        assert!((c.lookup(2.5) - 0.75).abs() < 1e-12);
        assert_eq!(c.lookup(10.0), 0.0);
        assert_eq!(c.lookup(0.0), 1.0);
    }

    #[test]
    fn rejects_bad_curves() {
        assert!(PerCurve::new(vec![]).is_err());
        assert!(PerCurve::new(vec![(1.0, 0.5), (1.0, 0.4)]).is_err());
        assert!(PerCurve::new(vec![(1.0, 0.5), (2.0, 0.6)]).is_err());
        assert!(PerCurve::new(vec![(1.0, 1.5)]).is_err());
    }

    #[test]
    fn csv_round_trip_and_validation() {
        let dir = tempfile::tempdir().unwrap();
        let good = dir.path().join("good.csv");
        std::fs::File::create(&good)
            .unwrap()
            .write_all(b"sinr_db,per\n-1,0.9\n1,0.1\n2,0.01\n")
            .unwrap();
        let c = PerCurve::from_csv(&good).unwrap();
        assert_eq!(c.points(), &[(-1.0, 0.9), (1.0, 0.1), (2.0, 0.01)]);

        let bad = dir.path().join("bad.csv");
        std::fs::File::create(&bad).unwrap().write_all(b"sinr_db,per\n2,0.1\n1,0.5\n").unwrap();
        assert!(PerCurve::from_csv(&bad).is_err());

        let header = dir.path().join("header.csv");
        std::fs::File::create(&header).unwrap().write_all(b"snr,p\n1,0.1\n").unwrap();
        assert!(PerCurve::from_csv(&header).is_err());
    }

    proptest! {
        #[test]
        fn lookup_is_monotone(
            mut xs in proptest::collection::btree_set(-300i32..300, 1..8),
            mut ps in proptest::collection::vec(0.0f64..=1.0, 8),
            q in proptest::collection::vec(-40.0f64..40.0, 2),
        ) {
            let xs: Vec<f64> = std::mem::take(&mut xs).into_iter().map(|x| x as f64 / 10.0).collect();
            ps.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let curve = PerCurve::new(xs.iter().copied().zip(ps.iter().copied()).collect()).unwrap();
            let (lo, hi) = if q[0] <= q[1] { (q[0], q[1]) } else { (q[1], q[0]) };
            let (a, b) = (curve.lookup(lo), curve.lookup(hi));
            prop_assert!(b <= a);
            prop_assert!((0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b));
        }
    }
}
