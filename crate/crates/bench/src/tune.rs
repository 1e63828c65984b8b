//! Cross-entropy search over solver hyperparameters.
//!
//! The search space is `(N, L, K, M, alpha, sigma2_init)`. Samples live in
//! continuous space and are projected before evaluation: clamped into their
//! ranges, integer dimensions rounded, `K` capped at `N` and `alpha` kept in
//! `(0, 1]`. The objective is the mean discounted return over a batch of
//! episodes that is shared by all candidates of one iteration. The tuned
//! configuration is the projected mean of the final distribution.

use lceopt_core::cross_entropy::sample_full;
use lceopt_core::rng::{derive_seed, substream};
use lceopt_core::{select_elites, update_basic, DiagonalGaussian, Scenario, ScoredSample, SolverConfig};
use serde::{Deserialize, Serialize};

use crate::batch::run_batch;
use crate::config::{Range, TuneSection};
use crate::stats::mean_and_ci95;
use crate::BenchError;

/// Smallest smoothing factor a projected sample may take.
pub const ALPHA_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneIteration {
    pub iteration: usize,
    pub best_value: f64,
    pub elite_threshold: f64,
    pub mean: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneReport {
    pub tuned: SolverConfig,
    pub history: Vec<TuneIteration>,
}

fn check_ranges(ranges: &[Range; 6]) -> Result<(), BenchError> {
    const NAMES: [&str; 6] = ["candidates", "trajectories", "elites", "depth", "alpha", "sigma2_init"];
    for (name, [lo, hi]) in NAMES.iter().zip(ranges) {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(BenchError::Config(format!("tune range for {name} is invalid: [{lo}, {hi}]")));
        }
    }
    Ok(())
}

/// Projects a raw sample onto a feasible solver configuration.
pub fn project(raw: &[f64], ranges: &[Range; 6], base: &SolverConfig) -> SolverConfig {
    let c = |i: usize| raw[i].clamp(ranges[i][0], ranges[i][1]);
    let int = |i: usize| (c(i).round() as usize).max(1);
    let candidates = int(0);
    SolverConfig {
        candidates,
        trajectories: int(1),
        elites: int(2).min(candidates),
        depth: int(3),
        alpha: c(4).clamp(ALPHA_FLOOR, 1.0),
        sigma2_init: c(5).max(0.0),
        ..base.clone()
    }
}

pub fn tune<S: Scenario>(
    scenario: &S,
    base: &SolverConfig,
    section: &TuneSection,
    base_seed: u64,
    workers: usize,
) -> Result<TuneReport, BenchError> {
    let ranges = section.ranges.as_array();
    check_ranges(&ranges)?;
    if section.iterations == 0 || section.episodes_per_evaluation == 0 {
        return Err(BenchError::Config("tune needs iterations >= 1 and episodes_per_evaluation >= 1".into()));
    }
    if section.elites == 0 || section.elites > section.candidates {
        return Err(BenchError::Config("tune needs 1 <= elites <= candidates".into()));
    }
    if !(section.alpha > 0.0 && section.alpha <= 1.0) {
        return Err(BenchError::Config(format!("tune alpha must lie in (0, 1], got {}", section.alpha)));
    }
    let mu: Vec<f64> = ranges.iter().map(|[lo, hi]| 0.5 * (lo + hi)).collect();
    let sigma2: Vec<f64> = ranges.iter().map(|[lo, hi]| ((hi - lo) / 4.0).powi(2)).collect();
    let mut dist = DiagonalGaussian::new(mu, sigma2).map_err(|e| BenchError::Runtime(e.to_string()))?;
    let mut rng = substream(base_seed, &[u64::from_le_bytes(*b"tune\0\0\0\0")]);
    let mut history = Vec::with_capacity(section.iterations);

    for iteration in 0..section.iterations {
        let episode_seed = derive_seed(base_seed, &[iteration as u64]);
        let mut batch = Vec::with_capacity(section.candidates);
        for _ in 0..section.candidates {
            let raw: Vec<f64> = sample_full(&dist, &mut rng)
                .iter()
                .zip(&ranges)
                .map(|(v, [lo, hi])| v.clamp(*lo, *hi))
                .collect();
            let config = project(&raw, &ranges, base);
            let records = run_batch(scenario, &config, episode_seed, section.episodes_per_evaluation, workers, |_| Ok(()))?;
            let returns: Vec<f64> = records.iter().map(|r| r.discounted_return).collect();
            let (mean, _) = mean_and_ci95(&returns);
            batch.push(ScoredSample::new(raw, mean).map_err(|e| BenchError::Runtime(e.to_string()))?);
        }
        let elites = select_elites(batch, section.elites).map_err(|e| BenchError::Runtime(e.to_string()))?;
        let best_value = elites.samples()[0].value();
        let elite_threshold = elites.threshold().unwrap_or(best_value);
        dist = update_basic(&dist, &elites, section.alpha).map_err(|e| BenchError::Runtime(e.to_string()))?;
        history.push(TuneIteration { iteration, best_value, elite_threshold, mean: dist.mu().to_vec() });
    }
    Ok(TuneReport { tuned: project(dist.mu(), &ranges, base), history })
}
