//! Packet reception ratio versus distance.
//!
//! A [`PrrHistogram`] counts, per technology and distance bin, how many
//! receivers of the transmitter's technology were in range of a counted
//! transmission and how many decoded it. Histograms from independent runs
//! merge by addition; [`aggregate`] turns them into pooled PRR with a
//! per-run spread, and [`emit`] writes CSV tables and a gnuplot script.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{ConfigError, Error};
use crate::traffic::TrafficMode;
use crate::Tech;

pub const CSV_HEADER: &str = "tech,bin_lo_m,bin_hi_m,prr,prr_std,opportunities,runs";

#[derive(Debug, Clone, PartialEq)]
pub struct HistogramConfig {
    pub bin_width_m: f64,
    pub max_distance_m: f64,
}

impl Default for HistogramConfig {
    fn default() -> Self {
        HistogramConfig { bin_width_m: 10.0, max_distance_m: 500.0 }
    }
}

impl HistogramConfig {
    pub fn validate(&self, errors: &mut Vec<ConfigError>) {
        if !(self.bin_width_m > 0.0) {
            errors.push(ConfigError::OutOfRange { key: "bin_width_m", message: "must be > 0".into() });
        }
        if !(self.max_distance_m > 0.0) {
            errors.push(ConfigError::OutOfRange { key: "max_distance_m", message: "must be > 0".into() });
        }
    }

    pub fn bin_count(&self) -> usize {
        (self.max_distance_m / self.bin_width_m).ceil() as usize
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BinCount {
    pub opportunities: u64,
    pub successes: u64,
}

impl BinCount {
    pub fn prr(&self) -> Option<f64> {
        (self.opportunities > 0).then(|| self.successes as f64 / self.opportunities as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrrHistogram {
    bin_width_m: f64,
    max_distance_m: f64,
    bins: BTreeMap<Tech, Vec<BinCount>>,
}

impl PrrHistogram {
    pub fn new(cfg: &HistogramConfig) -> Self {
        let n = cfg.bin_count();
        PrrHistogram {
            bin_width_m: cfg.bin_width_m,
            max_distance_m: cfg.max_distance_m,
            bins: Tech::ALL.iter().map(|&t| (t, vec![BinCount::default(); n])).collect(),
        }
    }

    pub fn bin_width_m(&self) -> f64 {
        self.bin_width_m
    }

    pub fn bin_count(&self) -> usize {
        self.bins[&Tech::ItsG5].len()
    }

    /// Lower-inclusive bin index, or `None` beyond the histogram range.
    pub fn bin_index(&self, distance_m: f64) -> Option<usize> {
        if !(distance_m >= 0.0) || distance_m > self.max_distance_m {
            return None;
        }
        Some(((distance_m / self.bin_width_m).floor() as usize).min(self.bin_count() - 1))
    }

    pub fn record(&mut self, tech: Tech, distance_m: f64, success: bool) {
        if let Some(i) = self.bin_index(distance_m) {
            let b = &mut self.bins.get_mut(&tech).expect("all techs present")[i];
            b.opportunities += 1;
            b.successes += success as u64;
        }
    }

    pub fn bins(&self, tech: Tech) -> &[BinCount] {
        &self.bins[&tech]
    }

    pub fn total_opportunities(&self, tech: Tech) -> u64 {
        self.bins(tech).iter().map(|b| b.opportunities).sum()
    }

    pub fn merge(&mut self, other: &PrrHistogram) {
        assert_eq!(self.bin_width_m, other.bin_width_m);
        assert_eq!(self.bin_count(), other.bin_count());
        for (tech, bins) in &mut self.bins {
            for (a, b) in bins.iter_mut().zip(other.bins(*tech)) {
                a.opportunities += b.opportunities;
                a.successes += b.successes;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinStats {
    pub lo_m: f64,
    pub hi_m: f64,
    pub opportunities: u64,
    pub successes: u64,
    /// Pooled: total successes over total opportunities.
    pub prr: Option<f64>,
    /// Mean of per-run PRR over runs with data in this bin.
    pub mean_run_prr: Option<f64>,
    /// Sample standard deviation of per-run PRR.
    pub prr_std: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub runs: usize,
    pub bin_width_m: f64,
    pub techs: BTreeMap<Tech, Vec<BinStats>>,
}

impl Aggregate {
    pub fn tech(&self, tech: Tech) -> Option<&[BinStats]> {
        self.techs.get(&tech).map(|v| v.as_slice())
    }

    /// Pooled PRR of the bin containing `distance_m`.
    pub fn prr_at(&self, tech: Tech, distance_m: f64) -> Option<f64> {
        let bins = self.tech(tech)?;
        let i = (distance_m / self.bin_width_m).floor() as usize;
        bins.get(i)?.prr
    }

    /// Upper edge of the last bin of the initial run of bins whose pooled
    /// PRR is at least `threshold`. Bins without data end the run.
    pub fn range_at_least(&self, tech: Tech, threshold: f64) -> f64 {
        let Some(bins) = self.tech(tech) else { return 0.0 };
        let mut range = 0.0;
        for b in bins {
            match b.prr {
                Some(p) if p >= threshold => range = b.hi_m,
                _ => break,
            }
        }
        range
    }
}

/// Combines per-run histograms. Techs with no opportunities at all are
/// left out.
pub fn aggregate(runs: &[PrrHistogram]) -> Aggregate {
    assert!(!runs.is_empty(), "aggregate needs at least one run");
    let mut pooled = runs[0].clone();
    for h in &runs[1..] {
        pooled.merge(h);
    }
    let w = pooled.bin_width_m;
    let mut techs = BTreeMap::new();
    for tech in Tech::ALL {
        if pooled.total_opportunities(tech) == 0 {
            continue;
        }
        let stats = pooled
            .bins(tech)
            .iter()
            .enumerate()
            .map(|(i, b)| {
                let per_run: Vec<f64> = runs.iter().filter_map(|h| h.bins(tech)[i].prr()).collect();
                let (mean, std) = mean_and_sample_std(&per_run);
                BinStats {
                    lo_m: i as f64 * w,
                    hi_m: (i + 1) as f64 * w,
                    opportunities: b.opportunities,
                    successes: b.successes,
                    prr: b.prr(),
                    mean_run_prr: mean,
                    prr_std: std,
                }
            })
            .collect();
        techs.insert(tech, stats);
    }
    Aggregate { runs: runs.len(), bin_width_m: w, techs }
}

fn mean_and_sample_std(xs: &[f64]) -> (Option<f64>, Option<f64>) {
    if xs.is_empty() {
        return (None, None);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return (Some(mean), Some(0.0));
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (Some(mean), Some(var.sqrt()))
}

/// `prr_<mode>_<itsg5pct>.csv`
pub fn csv_file_name(mode: TrafficMode, itsg5_fraction: f64) -> String {
    format!("prr_{}_{}.csv", mode.label(), itsg5_percent(itsg5_fraction))
}

pub fn itsg5_percent(itsg5_fraction: f64) -> u32 {
    (itsg5_fraction * 100.0).round() as u32
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Renders the CSV table for one aggregate.
pub fn to_csv(agg: &Aggregate) -> String {
    let mut out = String::with_capacity(4096);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for (tech, bins) in &agg.techs {
        for b in bins {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                tech.label(),
                b.lo_m,
                b.hi_m,
                opt(b.prr),
                if b.prr.is_some() { opt(b.prr_std) } else { String::new() },
                b.opportunities,
                agg.runs
            );
        }
    }
    out
}

/// Writes the CSV table for one (mix, mode) point and returns its path.
pub fn emit(agg: &Aggregate, mode: TrafficMode, itsg5_fraction: f64, out_dir: &Path) -> Result<PathBuf, Error> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let path = out_dir.join(csv_file_name(mode, itsg5_fraction));
    fs::write(&path, to_csv(agg)).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Writes `plot_<mode>.gp`, drawing one curve per mix for each technology.
pub fn emit_plot_script(mode: TrafficMode, mixes: &[f64], out_dir: &Path) -> Result<PathBuf, Error> {
    let path = out_dir.join(format!("plot_{}.gp", mode.label()));
    fs::write(&path, plot_script(mode, mixes)).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

pub fn plot_script(mode: TrafficMode, mixes: &[f64]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# gnuplot -p plot_{}.gp", mode.label());
    s.push_str("set datafile separator ','\n");
    let _ = writeln!(s, "set terminal pngcairo size 1200,450\nset output 'prr_{}.png'", mode.label());
    s.push_str("set multiplot layout 1,2\n");
    s.push_str("set xlabel 'Distance [m]'\nset ylabel 'Packet reception ratio'\n");
    s.push_str("set yrange [0:1]\nset grid\nset key bottom left\n");
    for tech in Tech::ALL {
        let _ = writeln!(s, "set title '{} ({} traffic)'", tech_title(tech), mode.label());
        let curves: Vec<String> = mixes
            .iter()
            .filter(|&&m| match tech {
                Tech::ItsG5 => m > 0.0,
                Tech::LteV2x => m < 1.0,
            })
            .map(|&m| {
                let pct = itsg5_percent(m);
                format!(
                    "'{}' using (strcol(1) eq '{}' ? ($2+$3)/2 : NaN):4 with linespoints title '{}% ITS-G5 / {}% LTE-V2X'",
                    csv_file_name(mode, m),
                    tech.label(),
                    pct,
                    100 - pct
                )
            })
            .collect();
        if curves.is_empty() {
            continue;
        }
        let _ = writeln!(s, "plot {}", curves.join(", \\\n     "));
    }
    s.push_str("unset multiplot\n");
    s
}

fn tech_title(tech: Tech) -> &'static str {
    match tech {
        Tech::ItsG5 => "ITS-G5",
        Tech::LteV2x => "LTE-V2X",
    }
}

/// One parsed line of an emitted CSV table.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct CsvRow {
    pub tech: String,
    pub bin_lo_m: f64,
    pub bin_hi_m: f64,
    pub prr: Option<f64>,
    pub prr_std: Option<f64>,
    pub opportunities: u64,
    pub runs: usize,
}

pub fn read_csv(path: &Path) -> Result<Vec<CsvRow>, Error> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    reader.deserialize().map(|r| r.map_err(|e| Error::csv(path, e))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn hist() -> PrrHistogram {
        PrrHistogram::new(&HistogramConfig::default())
    }

    #[test]
    fn ratio_in_one_bin() {
        let mut h = hist();
        for i in 0..10 {
            h.record(Tech::ItsG5, 95.0, i < 9);
        }
        assert_eq!(h.bins(Tech::ItsG5)[9].prr(), Some(0.9));
        assert_eq!(h.bins(Tech::ItsG5)[8].prr(), None);
    }

    #[test]
    fn binning_is_lower_inclusive() {
        let h = hist();
        assert_eq!(h.bin_index(100.0), Some(10));
        assert_eq!(h.bin_index(99.999), Some(9));
        assert_eq!(h.bin_index(0.0), Some(0));
        assert_eq!(h.bin_index(500.0), Some(49));
        assert_eq!(h.bin_index(500.1), None);
    }

    #[test]
    fn aggregate_pools_counts() {
        let mut a = hist();
        let mut b = hist();
        for i in 0..10 {
            a.record(Tech::LteV2x, 15.0, i < 8);
            b.record(Tech::LteV2x, 15.0, true);
        }
        let agg = aggregate(&[a.clone(), b]);
        let bin = &agg.tech(Tech::LteV2x).unwrap()[1];
        assert_eq!(bin.prr, Some(0.9));
        assert!((bin.mean_run_prr.unwrap() - 0.9).abs() < 1e-12);
        assert!((bin.prr_std.unwrap() - (0.02f64).sqrt()).abs() < 1e-12);
        assert!(agg.tech(Tech::ItsG5).is_none());

        let same = aggregate(&[a.clone(), a.clone(), a]);
        assert!(same.tech(Tech::LteV2x).unwrap()[1].prr_std.unwrap() < 1e-12);
    }

    #[test]
    fn twenty_runs_reported() {
        let mut h = hist();
        h.record(Tech::ItsG5, 1.0, true);
        let agg = aggregate(&vec![h; 20]);
        assert_eq!(agg.runs, 20);
        assert!(to_csv(&agg).lines().nth(1).unwrap().ends_with(",20"));
    }

    #[test]
    fn csv_header_and_empty_bins() {
        let mut h = hist();
        h.record(Tech::ItsG5, 5.0, true);
        let csv = to_csv(&aggregate(&[h]));
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert_eq!(lines.next(), Some("ItsG5,0,10,1,0,1,1"));
        assert_eq!(lines.next(), Some("ItsG5,10,20,,,0,1"));
        assert!(csv.lines().all(|l| !l.starts_with("LteV2x")));
    }

    #[test]
    fn range_at_least_stops_at_first_gap() {
        let mut h = hist();
        for d in [5.0, 15.0, 25.0] {
            h.record(Tech::ItsG5, d, true);
        }
        h.record(Tech::ItsG5, 35.0, false);
        h.record(Tech::ItsG5, 45.0, true);
        let agg = aggregate(&[h]);
        assert_eq!(agg.range_at_least(Tech::ItsG5, 0.9), 30.0);
        assert_eq!(agg.prr_at(Tech::ItsG5, 35.0), Some(0.0));
    }

    #[test]
    fn emitted_csv_reads_back_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let mut runs = Vec::new();
        for r in 0..3u64 {
            let mut h = hist();
            for i in 0..700u64 {
                let d = (i * 7 + r * 13) as f64 % 480.0;
                h.record(if i % 3 == 0 { Tech::LteV2x } else { Tech::ItsG5 }, d, (i * 31 + r) % 7 != 0);
            }
            runs.push(h);
        }
        let agg = aggregate(&runs);
        let path = emit(&agg, TrafficMode::Standard, 0.5, dir.path()).unwrap();
        assert!(path.ends_with("prr_standard_50.csv"));
        let rows = read_csv(&path).unwrap();
        let mut i = 0;
        for (tech, bins) in &agg.techs {
            for b in bins {
                let row = &rows[i];
                assert_eq!(row.tech, tech.label());
                assert_eq!(row.prr.map(f64::to_bits), b.prr.map(f64::to_bits));
                assert_eq!(row.prr_std.map(f64::to_bits), b.prr_std.map(f64::to_bits));
                assert_eq!(row.opportunities, b.opportunities);
                // successes are recoverable from the pooled ratio
                if let Some(p) = row.prr {
                    let s = (p * row.opportunities as f64).round() as u64;
                    assert_eq!(s, b.successes);
                    assert_eq!((s as f64 / row.opportunities as f64).to_bits(), p.to_bits());
                }
                i += 1;
            }
        }
        assert_eq!(i, rows.len());
    }

    #[test]
    fn plot_script_mentions_every_mix() {
        let s = plot_script(TrafficMode::Constrained, &[1.0, 0.5, 0.0]);
        assert!(s.contains("prr_constrained_100.csv"));
        assert!(s.contains("prr_constrained_50.csv"));
        assert!(s.contains("prr_constrained_0.csv"));
        // no ITS-G5 curve for the LTE-only mix
        assert!(!s.contains("'prr_constrained_0.csv' using (strcol(1) eq 'ItsG5'"));
    }

    fn arb_hist() -> impl Strategy<Value = PrrHistogram> {
        proptest::collection::vec((0.0f64..520.0, any::<bool>(), any::<bool>()), 0..60).prop_map(|recs| {
            let mut h = hist();
            for (d, s, t) in recs {
                h.record(if t { Tech::ItsG5 } else { Tech::LteV2x }, d, s);
            }
            h
        })
    }

    proptest! {
        #[test]
        fn merge_is_associative_and_commutative(a in arb_hist(), b in arb_hist(), c in arb_hist()) {
            let mut ab = a.clone(); ab.merge(&b);
            let mut ba = b.clone(); ba.merge(&a);
            prop_assert_eq!(&ab, &ba);
            let mut ab_c = ab.clone(); ab_c.merge(&c);
            let mut bc = b.clone(); bc.merge(&c);
            let mut a_bc = a.clone(); a_bc.merge(&bc);
            prop_assert_eq!(ab_c, a_bc);
        }

        #[test]
        fn pooled_prr_in_unit_interval(a in arb_hist(), b in arb_hist()) {
            let agg = aggregate(&[a, b]);
            for bins in agg.techs.values() {
                for bin in bins {
                    prop_assert!(bin.successes <= bin.opportunities);
                    if let Some(p) = bin.prr { prop_assert!((0.0..=1.0).contains(&p)); }
                }
            }
        }
    }
}
