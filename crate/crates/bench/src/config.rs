//! The configuration document.
//!
//! ```json
//! {
//!   "scenario": { "id": "conttag", "discount": 0.95 },
//!   "solver": { "candidates": 30, "depth": 2, "budget": { "cpu_seconds": 0.25 } },
//!   "run": { "episodes": 200, "base_seed": 0, "workers": 1 }
//! }
//! ```
//!
//! Every section except `scenario` is optional and every field has a default.
//! Unknown fields are rejected.

use std::path::{Path, PathBuf};

use lceopt_core::scenarios::{ContTagConfig, OneStepToyConfig, PushboxConfig, SyntheticConfig, TwoStateToyConfig};
use lceopt_core::SolverConfig;
use serde::{Deserialize, Serialize};

use crate::BenchError;

/// Environment variable overriding `run.base_seed`.
pub const SEED_ENV: &str = "LCEOPT_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "snake_case")]
pub enum ScenarioConfig {
    Conttag(ContTagConfig),
    Pushbox(PushboxConfig),
    Toy(OneStepToyConfig),
    TwoState(TwoStateToyConfig),
    Synthetic(SyntheticConfig),
}

impl ScenarioConfig {
    pub fn id(&self) -> &'static str {
        match self {
            ScenarioConfig::Conttag(_) => "conttag",
            ScenarioConfig::Pushbox(_) => "pushbox",
            ScenarioConfig::Toy(_) => "toy",
            ScenarioConfig::TwoState(_) => "two_state",
            ScenarioConfig::Synthetic(_) => "synthetic",
        }
    }

    /// Default parameters for scenario `id`.
    pub fn from_id(id: &str) -> Result<Self, BenchError> {
        Ok(match id {
            "conttag" => ScenarioConfig::Conttag(Default::default()),
            "pushbox" => ScenarioConfig::Pushbox(Default::default()),
            "toy" => ScenarioConfig::Toy(Default::default()),
            "two_state" => ScenarioConfig::TwoState(Default::default()),
            "synthetic" => ScenarioConfig::Synthetic(Default::default()),
            other => {
                return Err(BenchError::Config(format!(
                    "unknown scenario `{other}` (expected conttag, pushbox, toy, two_state or synthetic)"
                )))
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    /// `episodes.csv` with columns `seed,return,steps,termination`.
    #[default]
    Csv,
    /// `episodes.jsonl`, one record per line.
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub episodes: usize,
    pub base_seed: u64,
    pub workers: usize,
    /// Output directory; nothing is written when absent.
    pub output: Option<PathBuf>,
    pub format: OutputFormat,
}

impl Default for RunSection {
    fn default() -> Self {
        Self { episodes: 200, base_seed: 0, workers: 1, output: None, format: OutputFormat::Csv }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimingSection {
    pub depths: Vec<usize>,
    pub iterations: usize,
    /// Planning steps averaged per cell.
    pub steps: usize,
}

impl Default for TimingSection {
    fn default() -> Self {
        Self { depths: vec![1, 2, 3, 4, 5], iterations: 50, steps: 20 }
    }
}

/// Closed search interval; a point interval pins the parameter.
pub type Range = [f64; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuneRanges {
    pub candidates: Range,
    pub trajectories: Range,
    pub elites: Range,
    pub depth: Range,
    pub alpha: Range,
    pub sigma2_init: Range,
}

impl Default for TuneRanges {
    fn default() -> Self {
        Self {
            candidates: [10.0, 100.0],
            trajectories: [1.0, 500.0],
            elites: [1.0, 500.0],
            depth: [1.0, 10.0],
            alpha: [0.0, 1.0],
            sigma2_init: [0.01, 4.0],
        }
    }
}

impl TuneRanges {
    pub fn as_array(&self) -> [Range; 6] {
        [self.candidates, self.trajectories, self.elites, self.depth, self.alpha, self.sigma2_init]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuneSection {
    pub iterations: usize,
    pub candidates: usize,
    pub elites: usize,
    pub alpha: f64,
    pub episodes_per_evaluation: usize,
    pub ranges: TuneRanges,
}

impl Default for TuneSection {
    fn default() -> Self {
        Self { iterations: 100, candidates: 20, elites: 5, alpha: 0.8, episodes_per_evaluation: 20, ranges: TuneRanges::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub timing: TimingSection,
    #[serde(default)]
    pub tune: TuneSection,
}

impl BenchConfig {
    /// Default sections around `scenario`.
    pub fn for_scenario(scenario: ScenarioConfig) -> Self {
        Self {
            scenario,
            solver: SolverConfig::default(),
            run: RunSection::default(),
            timing: TimingSection::default(),
            tune: TuneSection::default(),
        }
    }

    /// Parses a JSON document, reporting the failing field path and position.
    pub fn from_json(text: &str) -> Result<Self, BenchError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: BenchConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            let at = if path.is_empty() || path == "." { String::new() } else { format!(" at `{path}`") };
            BenchError::Config(format!("{inner}{at} (line {}, column {})", inner.line(), inner.column()))
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            BenchError::Config(msg) => BenchError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Applies `LCEOPT_SEED` from the environment, if set.
    pub fn apply_env(&mut self) -> Result<(), BenchError> {
        if let Ok(raw) = std::env::var(SEED_ENV) {
            self.run.base_seed = raw
                .trim()
                .parse()
                .map_err(|_| BenchError::Config(format!("{SEED_ENV} must be an unsigned integer, got `{raw}`")))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.run.episodes == 0 {
            return Err(BenchError::Config("run.episodes must be at least 1".into()));
        }
        if self.run.workers == 0 {
            return Err(BenchError::Config("run.workers must be at least 1".into()));
        }
        self.solver.validate().map_err(|e| BenchError::Config(e.to_string()))?;
        crate::registry::build(&self.scenario)?;
        Ok(())
    }
}
