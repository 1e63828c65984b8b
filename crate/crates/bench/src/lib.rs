//! Benchmark harness for the planner.
//!
//! Three workflows share one JSON configuration document:
//! - `run`: a batch of independent episodes, per-episode records plus
//!   aggregate return statistics.
//! - `timing`: CPU time per planning step to finish a fixed number of CE
//!   iterations, lazy against basic, over tree depths.
//! - `tune`: cross-entropy search over solver hyperparameters.

pub mod batch;
pub mod config;
pub mod output;
pub mod registry;
pub mod stats;
pub mod timing;
pub mod tune;

use thiserror::Error;

/// Harness failures, split by the exit code they map to.
#[derive(Debug, Error)]
pub enum BenchError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl BenchError {
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Config(_) => 2,
            BenchError::Runtime(_) => 3,
        }
    }
}

impl From<std::io::Error> for BenchError {
    fn from(e: std::io::Error) -> Self {
        BenchError::Runtime(e.to_string())
    }
}

impl From<lceopt_core::SolverError> for BenchError {
    fn from(e: lceopt_core::SolverError) -> Self {
        match e {
            lceopt_core::SolverError::InvalidConfig(msg) => BenchError::Config(msg),
            other => BenchError::Runtime(other.to_string()),
        }
    }
}

pub use batch::run_batch;
pub use config::{BenchConfig, OutputFormat, RunSection, ScenarioConfig, TimingSection, TuneSection};
pub use stats::BatchStats;
pub use timing::{measure_timing, TimingCell, TimingReport};
pub use tune::{tune, TuneReport};
