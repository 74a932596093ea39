use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use rayon::prelude::*;

use super::config::ExperimentConfig;
use crate::engine::{RunLog, Simulation};
use crate::error::Error;
use crate::results::{self, aggregate, Aggregate};
use crate::rng::Seed;
use crate::traffic::TrafficMode;
use crate::Tech;

/// Distances reported in the summary table.
pub const SUMMARY_DISTANCES_M: [f64; 4] = [50.0, 100.0, 200.0, 300.0];

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Write the event trace of the first run of every sweep point.
    pub verbose: bool,
}

/// Aggregated results for one (mode, mix) sweep point.
#[derive(Debug, Clone)]
pub struct PointResult {
    pub mode: TrafficMode,
    pub itsg5_fraction: f64,
    pub aggregate: Aggregate,
    pub csv_path: PathBuf,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub points: Vec<PointResult>,
    pub files: Vec<PathBuf>,
    /// Measured seconds per run, warm-up excluded.
    pub measured_s: f64,
}

impl ExperimentReport {
    pub fn point(&self, mode: TrafficMode, itsg5_fraction: f64) -> Option<&PointResult> {
        self.points.iter().find(|p| p.mode == mode && p.itsg5_fraction == itsg5_fraction)
    }

    /// Plain-text table of PRR at the summary distances.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = write!(s, "{:<12} {:>6} {:<7}", "mode", "itsg5%", "tech");
        for d in SUMMARY_DISTANCES_M {
            let _ = write!(s, " {:>8}", format!("@{d}m"));
        }
        s.push('\n');
        for p in &self.points {
            for tech in Tech::ALL {
                if p.aggregate.tech(tech).is_none() {
                    continue;
                }
                let _ = write!(
                    s,
                    "{:<12} {:>6} {:<7}",
                    p.mode.label(),
                    results::itsg5_percent(p.itsg5_fraction),
                    tech.label()
                );
                for d in SUMMARY_DISTANCES_M {
                    match p.aggregate.prr_at(tech, d) {
                        Some(v) => {
                            let _ = write!(s, " {v:>8.4}");
                        }
                        None => {
                            let _ = write!(s, " {:>8}", "-");
                        }
                    }
                }
                s.push('\n');
            }
        }
        if let Some(p) = self.points.first() {
            let _ = writeln!(s, "runs per point: n={}, {} s measured per run", p.aggregate.runs, self.measured_s);
        }
        s
    }
}

/// Seed of one run in a sweep.
pub fn run_seed(master_seed: u64, itsg5_fraction: f64, mode: TrafficMode, run_index: usize) -> Seed {
    Seed::for_run(master_seed, itsg5_fraction, mode.tag(), run_index as u32)
}

/// Executes `|modes| x |mixes| x runs` simulations, writes one CSV per
/// point, one gnuplot script per mode and `summary.txt`.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<ExperimentReport, Error> {
    cfg.validate()?;
    let mut written: Vec<PathBuf> = Vec::new();
    let result = execute(cfg, opts, &mut written);
    if result.is_err() {
        for f in &written {
            let _ = fs::remove_file(f);
        }
    }
    result
}

fn execute(cfg: &ExperimentConfig, opts: &RunOptions, written: &mut Vec<PathBuf>) -> Result<ExperimentReport, Error> {
    let points: Vec<(TrafficMode, f64)> =
        cfg.modes.iter().flat_map(|&m| cfg.mix_fractions.iter().map(move |&f| (m, f))).collect();
    let sims: Vec<_> = points
        .iter()
        .map(|&(mode, f)| {
            let mut sim = cfg.sim.clone();
            sim.mode = mode;
            sim.itsg5_fraction = f;
            sim
        })
        .collect();
    let jobs: Vec<(usize, usize)> = (0..points.len()).flat_map(|p| (0..cfg.runs).map(move |r| (p, r))).collect();

    let simulate = || -> Result<Vec<RunLog>, Error> {
        jobs.par_iter()
            .map(|&(p, r)| {
                let (mode, f) = points[p];
                let mut sim = Simulation::new(&sims[p], run_seed(cfg.master_seed, f, mode, r))?;
                sim.trace(opts.verbose && r == 0);
                Ok(sim.run())
            })
            .collect()
    };
    let logs = if cfg.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build()
            .map_err(|e| Error::Run(e.to_string()))?
            .install(simulate)?
    } else {
        simulate()?
    };

    fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))?;
    let mut report = ExperimentReport { points: Vec::new(), files: Vec::new(), measured_s: cfg.sim.measure_s };
    for (p, &(mode, f)) in points.iter().enumerate() {
        let runs = &logs[p * cfg.runs..(p + 1) * cfg.runs];
        let hists: Vec<_> = runs.iter().map(|l| l.histogram.clone()).collect();
        let agg = aggregate(&hists);
        let csv_path = results::emit(&agg, mode, f, &cfg.out_dir)?;
        written.push(csv_path.clone());
        if opts.verbose {
            let path = cfg.out_dir.join(format!("trace_{}_{}.txt", mode.label(), results::itsg5_percent(f)));
            let mut text = runs[0].trace.join("\n");
            text.push('\n');
            fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }
        report.points.push(PointResult { mode, itsg5_fraction: f, aggregate: agg, csv_path });
    }
    for &mode in &cfg.modes {
        written.push(results::emit_plot_script(mode, &cfg.mix_fractions, &cfg.out_dir)?);
    }
    let summary_path = cfg.out_dir.join("summary.txt");
    fs::write(&summary_path, report.summary()).map_err(|e| Error::io(&summary_path, e))?;
    written.push(summary_path);
    report.files = written.clone();
    Ok(report)
}
