//! Aggregate return statistics.

use lceopt_core::{EpisodeRecord, Termination};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchStats {
    pub n: usize,
    pub mean_return: f64,
    /// `1.96 * s / sqrt(n)` with the `n - 1` sample deviation; `None` for `n < 2`.
    pub ci95_halfwidth: Option<f64>,
    pub mean_steps: f64,
    pub failure_rate: f64,
}

impl BatchStats {
    pub fn from_records(records: &[EpisodeRecord]) -> Self {
        let returns: Vec<f64> = records.iter().map(|r| r.discounted_return).collect();
        let (mean_return, ci95_halfwidth) = mean_and_ci95(&returns);
        let n = records.len();
        let mean_steps = if n == 0 { f64::NAN } else { records.iter().map(|r| r.steps as f64).sum::<f64>() / n as f64 };
        let failures = records.iter().filter(|r| r.termination == Termination::Failure).count();
        let failure_rate = if n == 0 { f64::NAN } else { failures as f64 / n as f64 };
        Self { n, mean_return, ci95_halfwidth, mean_steps, failure_rate }
    }

    /// Standard error of the mean, `ci95 / 1.96`.
    pub fn std_error(&self) -> Option<f64> {
        self.ci95_halfwidth.map(|h| h / 1.96)
    }
}

/// Sample mean and 95% normal-approximation half-width.
pub fn mean_and_ci95(values: &[f64]) -> (f64, Option<f64>) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, None);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, None);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, Some(1.96 * var.sqrt() / (n as f64).sqrt()))
}
