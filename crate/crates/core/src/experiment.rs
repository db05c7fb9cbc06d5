//! Multi-seed experiment driver and CSV output.
//!
//! Runs are independent, so the batch fans out over rayon when the
//! `parallel` feature is on. Results always come back in job order, which
//! keeps the CSV files byte-identical between the two paths.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::scheduler::SchedulerKind;
use crate::sim::{run_sim, MetricsReport};
use crate::stats::{aggregate, convergence_curve};
use crate::topology::DeviceKind;

pub const DELAYS_HEADER: &str = "scheduler,seed,class,mean_delay_ms,packets";
pub const CONVERGENCE_HEADER: &str = "scheduler,seed,subframe,reward,metric";
pub const SUMMARY_HEADER: &str = "scheduler,class,mean_delay_ms,ci95_low,ci95_high,n_seeds";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Job {
    pub scheduler: SchedulerKind,
    pub seed: u64,
}

/// Every (scheduler, seed) pair of the config, scheduler-major.
pub fn jobs(cfg: &RunConfig) -> Vec<Job> {
    cfg.scheduler
        .kinds()
        .into_iter()
        .flat_map(|scheduler| cfg.seeds.iter().map(move |&seed| Job { scheduler, seed }))
        .collect()
}

pub fn run_batch_sequential(cfg: &RunConfig, jobs: &[Job]) -> Result<Vec<MetricsReport>> {
    jobs.iter().map(|j| run_sim(cfg, j.scheduler, j.seed)).collect()
}

#[cfg(feature = "parallel")]
pub fn run_batch_parallel(cfg: &RunConfig, jobs: &[Job]) -> Result<Vec<MetricsReport>> {
    use rayon::prelude::*;
    jobs.par_iter().map(|j| run_sim(cfg, j.scheduler, j.seed)).collect()
}

pub fn run_batch(cfg: &RunConfig, jobs: &[Job]) -> Result<Vec<MetricsReport>> {
    #[cfg(feature = "parallel")]
    {
        run_batch_parallel(cfg, jobs)
    }
    #[cfg(not(feature = "parallel"))]
    {
        run_batch_sequential(cfg, jobs)
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

pub fn delays_csv(reports: &[MetricsReport]) -> String {
    let mut out = String::from(DELAYS_HEADER);
    out.push('\n');
    for r in reports {
        for class in DeviceKind::ALL {
            writeln!(
                out,
                "{},{},{},{},{}",
                r.scheduler,
                r.seed,
                class.label(),
                fmt_opt(r.class_mean_delay(class)),
                r.class_packets(class)
            )
            .expect("write to string");
        }
    }
    out
}

pub fn convergence_csv(reports: &[MetricsReport]) -> String {
    let mut out = String::from(CONVERGENCE_HEADER);
    out.push('\n');
    for r in reports {
        let trace = r.mean_reward_trace();
        for (t, (reward, metric)) in trace.iter().zip(convergence_curve(&trace)).enumerate() {
            writeln!(out, "{},{},{},{:.6},{:.6}", r.scheduler, r.seed, t + 1, reward, metric).expect("write to string");
        }
    }
    out
}

pub fn summary_csv(reports: &[MetricsReport]) -> Result<String> {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for row in aggregate(reports)? {
        let (mean, lo, hi, n) = match row.stats {
            Some(s) => (Some(s.mean), s.ci95.map(|c| c.0), s.ci95.map(|c| c.1), s.n),
            None => (None, None, None, 0),
        };
        writeln!(
            out,
            "{},{},{},{},{},{}",
            row.scheduler,
            row.class.label(),
            fmt_opt(mean),
            fmt_opt(lo),
            fmt_opt(hi),
            n
        )
        .expect("write to string");
    }
    Ok(out)
}

#[derive(Debug)]
pub struct ExperimentOutput {
    pub reports: Vec<MetricsReport>,
    pub files: Vec<PathBuf>,
}

/// Writes the three CSV files for `reports` into `dir`.
pub fn write_outputs(dir: &Path, reports: &[MetricsReport]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = [
        ("delays.csv", delays_csv(reports)),
        ("convergence.csv", convergence_csv(reports)),
        ("summary.csv", summary_csv(reports)?),
    ];
    files
        .into_iter()
        .map(|(name, body)| {
            let path = dir.join(name);
            fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
            Ok(path)
        })
        .collect()
}

/// Runs every (scheduler, seed) pair of `cfg` and writes the CSV files to
/// `cfg.output_dir`.
pub fn run_experiment(cfg: &RunConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let reports = run_batch(cfg, &jobs(cfg))?;
    let files = write_outputs(&cfg.output_dir, &reports)?;
    Ok(ExperimentOutput { reports, files })
}
