//! Lazy against basic CPU time per planning step.
//!
//! Every cell runs planning steps with a fixed CE-iteration budget and
//! averages the CPU time of the iteration loop over a fixed number of steps,
//! continuing into further episodes (seeds `base_seed + 1, ...`) if an episode
//! ends early. Both variants use the same seeds. Belief updates are not
//! counted.

use lceopt_core::{run_episode_with, Budget, Scenario, SolverConfig, Variant};
use serde::{Deserialize, Serialize};

use crate::config::TimingSection;
use crate::BenchError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingCell {
    pub variant: Variant,
    pub depth: usize,
    pub mean_cpu_seconds: f64,
    pub steps_measured: usize,
    pub parameter_dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub iterations: usize,
    pub steps: usize,
    pub candidates: usize,
    pub trajectories: usize,
    pub cells: Vec<TimingCell>,
}

impl TimingReport {
    pub fn cell(&self, variant: Variant, depth: usize) -> Option<&TimingCell> {
        self.cells.iter().find(|c| c.variant == variant && c.depth == depth)
    }

    /// Basic over lazy CPU time at `depth`.
    pub fn ratio(&self, depth: usize) -> Option<f64> {
        let basic = self.cell(Variant::Basic, depth)?;
        let lazy = self.cell(Variant::Lazy, depth)?;
        Some(basic.mean_cpu_seconds / lazy.mean_cpu_seconds)
    }
}

/// Mean CPU seconds per planning step for one `(variant, depth)` cell.
pub fn measure_cell<S: Scenario>(
    scenario: &S,
    solver: &SolverConfig,
    variant: Variant,
    depth: usize,
    iterations: usize,
    steps: usize,
    base_seed: u64,
) -> Result<TimingCell, BenchError> {
    let config = SolverConfig { variant, depth, budget: Budget::CeIterations(iterations), ..solver.clone() };
    let parameter_dim = config.shape_for(scenario)?.parameter_dim();
    let mut times = Vec::with_capacity(steps);
    let mut seed = base_seed;
    while times.len() < steps {
        let remaining = steps - times.len();
        run_episode_with(scenario, &config, seed, remaining.min(scenario.spec().max_episode_steps), |plan| {
            times.push(plan.elapsed_cpu_seconds)
        })?;
        seed = seed.wrapping_add(1);
    }
    let mean = times.iter().sum::<f64>() / times.len().max(1) as f64;
    Ok(TimingCell { variant, depth, mean_cpu_seconds: mean, steps_measured: times.len(), parameter_dim })
}

pub fn measure_timing<S: Scenario>(
    scenario: &S,
    solver: &SolverConfig,
    section: &TimingSection,
    base_seed: u64,
) -> Result<TimingReport, BenchError> {
    if section.iterations == 0 || section.steps == 0 || section.depths.is_empty() {
        return Err(BenchError::Config("timing needs iterations >= 1, steps >= 1 and at least one depth".into()));
    }
    let mut cells = Vec::new();
    for &depth in &section.depths {
        for variant in [Variant::Lazy, Variant::Basic] {
            cells.push(measure_cell(scenario, solver, variant, depth, section.iterations, section.steps, base_seed)?);
        }
    }
    Ok(TimingReport {
        iterations: section.iterations,
        steps: section.steps,
        candidates: solver.candidates,
        trajectories: solver.trajectories,
        cells,
    })
}
