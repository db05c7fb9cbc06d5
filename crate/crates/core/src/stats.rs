//! Cross-seed statistics and the reward-based convergence metric.

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::scheduler::SchedulerKind;
use crate::sim::MetricsReport;
use crate::topology::DeviceKind;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleStats {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation; zero for a single value.
    pub sd: f64,
    /// Two-sided 95% Student-t interval, absent below two samples.
    pub ci95: Option<(f64, f64)>,
}

impl SampleStats {
    pub fn from_values(values: &[f64]) -> Option<Self> {
        let n = values.len();
        if n == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        if n == 1 {
            return Some(Self {
                n,
                mean,
                sd: 0.0,
                ci95: None,
            });
        }
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let sd = var.sqrt();
        let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
            .expect("positive degrees of freedom")
            .inverse_cdf(0.975);
        let half = t * sd / (n as f64).sqrt();
        Some(Self {
            n,
            mean,
            sd,
            ci95: Some((mean - half, mean + half)),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub scheduler: SchedulerKind,
    pub class: DeviceKind,
    pub stats: Option<SampleStats>,
}

/// Per-scheduler, per-class statistics of the per-run mean delays. Runs
/// that delivered nothing for a class do not contribute to it.
pub fn aggregate(reports: &[MetricsReport]) -> Result<Vec<SummaryRow>> {
    if reports.is_empty() {
        return Err(Error::NoReports);
    }
    let mut kinds: Vec<SchedulerKind> = reports.iter().map(|r| r.scheduler).collect();
    kinds.sort();
    kinds.dedup();
    let mut rows = Vec::new();
    for kind in kinds {
        for class in DeviceKind::ALL {
            let values: Vec<f64> = reports
                .iter()
                .filter(|r| r.scheduler == kind)
                .filter_map(|r| r.class_mean_delay(class))
                .collect();
            rows.push(SummaryRow {
                scheduler: kind,
                class,
                stats: SampleStats::from_values(&values),
            });
        }
    }
    Ok(rows)
}

/// `1 - sum |RC_t| / T` over the whole trace.
pub fn convergence_metric(rewards: &[f64]) -> Result<f64> {
    if rewards.is_empty() {
        return Err(Error::EmptyTrace);
    }
    Ok(1.0 - rewards.iter().map(|r| r.abs()).sum::<f64>() / rewards.len() as f64)
}

/// The metric evaluated on every prefix: entry `t` covers subframes `0..=t`.
pub fn convergence_curve(rewards: &[f64]) -> Vec<f64> {
    let mut sum = 0.0;
    rewards
        .iter()
        .enumerate()
        .map(|(t, r)| {
            sum += r.abs();
            1.0 - sum / (t + 1) as f64
        })
        .collect()
}

/// Trailing moving average with a window that grows from 1 up to `window`.
pub fn moving_average(xs: &[f64], window: usize) -> Vec<f64> {
    let window = window.max(1);
    let mut out = Vec::with_capacity(xs.len());
    let mut sum = 0.0;
    for (i, x) in xs.iter().enumerate() {
        sum += x;
        if i >= window {
            sum -= xs[i - window];
        }
        out.push(sum / (i + 1).min(window) as f64);
    }
    out
}

/// First index from which the series stays within `rel_tol` (relative) of
/// its final value.
pub fn settling_index(series: &[f64], rel_tol: f64) -> Option<usize> {
    let last = *series.last()?;
    let band = rel_tol * last.abs();
    let outside = series.iter().rposition(|v| (v - last).abs() > band);
    Some(outside.map_or(0, |i| i + 1))
}
