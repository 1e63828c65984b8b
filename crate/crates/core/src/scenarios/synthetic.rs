//! Synthetic high-dimensional action scenario for timing studies.
//!
//! The state never changes, observations are uniform over `|O|` indices and
//! the reward is `-|a|^2 / D`. Only the size of the policy parameter space
//! matters here.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::pomdp::{GenerativeOutcome, ParticleBelief, ProblemSpec, Scenario};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub action_dim: usize,
    pub observation_count: usize,
    pub discount: f64,
    pub max_steps: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self { action_dim: 12, observation_count: 2, discount: 0.95, max_steps: 20 }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticHighDim {
    spec: ProblemSpec,
}

impl SyntheticHighDim {
    pub fn new(config: SyntheticConfig) -> Result<Self, String> {
        let d = config.action_dim;
        let spec = ProblemSpec::new(config.observation_count, config.discount, config.max_steps, vec![-1.0; d], vec![1.0; d])
            .map_err(|e| e.to_string())?;
        Ok(Self { spec })
    }
}

impl Default for SyntheticHighDim {
    fn default() -> Self {
        Self::new(SyntheticConfig::default()).expect("default synthetic scenario is valid")
    }
}

impl Scenario for SyntheticHighDim {
    type State = ();

    fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    fn generate<R: Rng + ?Sized>(&self, _state: &(), action: &[f64], rng: &mut R) -> GenerativeOutcome<()> {
        let d = action.len() as f64;
        let reward = -action.iter().map(|a| a * a).sum::<f64>() / d;
        let observation = rng.random_range(0..self.spec.observation_count);
        GenerativeOutcome { next_state: (), observation, reward, terminal: false }
    }

    fn observation_likelihood(&self, _state: &(), _action: &[f64], _next: &(), _observation: usize) -> Option<f64> {
        Some(1.0 / self.spec.observation_count as f64)
    }

    fn sample_initial_state<R: Rng + ?Sized>(&self, _rng: &mut R) {}

    fn initial_belief<R: Rng + ?Sized>(&self, _true_state: &(), n: usize, _rng: &mut R) -> ParticleBelief<()> {
        ParticleBelief::uniform(vec![(); n.max(1)]).expect("non-empty belief")
    }
}
