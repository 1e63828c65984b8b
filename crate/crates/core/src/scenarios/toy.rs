//! Small oracle scenarios.
//!
//! [`OneStepToy`] is a deterministic single-step problem with reward
//! `-|a - a*|^2`, so the optimal action is known in closed form.
//! [`TwoStateToy`] is a discrete two-state chain with a known observation
//! matrix, used to compare particle filtering against exact Bayes.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::pomdp::{GenerativeOutcome, ParticleBelief, ProblemSpec, Scenario};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OneStepToyConfig {
    pub optimum: Vec<f64>,
    pub action_lower: Vec<f64>,
    pub action_upper: Vec<f64>,
    pub discount: f64,
}

impl Default for OneStepToyConfig {
    fn default() -> Self {
        Self {
            optimum: vec![1.5, -0.7],
            action_lower: vec![-5.0, -5.0],
            action_upper: vec![5.0, 5.0],
            discount: 0.95,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OneStepToy {
    optimum: Vec<f64>,
    spec: ProblemSpec,
}

impl OneStepToy {
    pub fn new(config: OneStepToyConfig) -> Result<Self, String> {
        if config.optimum.len() != config.action_lower.len() {
            return Err(format!(
                "optimum has {} components but the action box has {}",
                config.optimum.len(),
                config.action_lower.len()
            ));
        }
        let spec = ProblemSpec::new(1, config.discount, 1, config.action_lower, config.action_upper)
            .map_err(|e| e.to_string())?;
        Ok(Self { optimum: config.optimum, spec })
    }

    pub fn optimum(&self) -> &[f64] {
        &self.optimum
    }

    pub fn reward(&self, action: &[f64]) -> f64 {
        -action.iter().zip(&self.optimum).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
    }
}

impl Default for OneStepToy {
    fn default() -> Self {
        Self::new(OneStepToyConfig::default()).expect("default toy is valid")
    }
}

impl Scenario for OneStepToy {
    type State = ();

    fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    fn generate<R: Rng + ?Sized>(&self, _state: &(), action: &[f64], _rng: &mut R) -> GenerativeOutcome<()> {
        GenerativeOutcome { next_state: (), observation: 0, reward: self.reward(action), terminal: true }
    }

    fn sample_initial_state<R: Rng + ?Sized>(&self, _rng: &mut R) {}

    fn initial_belief<R: Rng + ?Sized>(&self, _true_state: &(), n: usize, _rng: &mut R) -> ParticleBelief<()> {
        ParticleBelief::uniform(vec![(); n.max(1)]).expect("non-empty belief")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TwoStateToyConfig {
    /// `transition[s][s']`, independent of the action.
    pub transition: [[f64; 2]; 2],
    /// `observation[s'][o]`.
    pub observation: [[f64; 2]; 2],
    pub prior: [f64; 2],
    pub discount: f64,
    pub max_steps: usize,
}

impl Default for TwoStateToyConfig {
    fn default() -> Self {
        Self {
            transition: [[0.9, 0.1], [0.3, 0.7]],
            observation: [[0.8, 0.2], [0.25, 0.75]],
            prior: [0.5, 0.5],
            discount: 0.95,
            max_steps: 10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TwoStateToy {
    config: TwoStateToyConfig,
    spec: ProblemSpec,
}

fn is_distribution(row: &[f64; 2]) -> bool {
    row.iter().all(|&p| (0.0..=1.0).contains(&p)) && ((row[0] + row[1]) - 1.0).abs() < 1e-9
}

impl TwoStateToy {
    pub fn new(config: TwoStateToyConfig) -> Result<Self, String> {
        let rows = config.transition.iter().chain(&config.observation).chain(std::iter::once(&config.prior));
        if !rows.into_iter().all(is_distribution) {
            return Err("two-state toy rows must be probability distributions".into());
        }
        let spec = ProblemSpec::new(2, config.discount, config.max_steps, vec![-1.0], vec![1.0])
            .map_err(|e| e.to_string())?;
        Ok(Self { config, spec })
    }

    pub fn config(&self) -> &TwoStateToyConfig {
        &self.config
    }

    /// Exact Bayes filter step: predict through the transition matrix, then
    /// condition on `observation`. Returns `None` if the observation has zero
    /// probability under the prediction.
    pub fn exact_update(&self, belief: [f64; 2], observation: usize) -> Option<[f64; 2]> {
        let t = &self.config.transition;
        let z = &self.config.observation;
        let mut post = [0.0; 2];
        for (next, p) in post.iter_mut().enumerate() {
            let predicted = belief[0] * t[0][next] + belief[1] * t[1][next];
            *p = predicted * z[next][observation];
        }
        let total = post[0] + post[1];
        (total > 0.0).then(|| [post[0] / total, post[1] / total])
    }
}

impl Default for TwoStateToy {
    fn default() -> Self {
        Self::new(TwoStateToyConfig::default()).expect("default toy is valid")
    }
}

impl Scenario for TwoStateToy {
    type State = usize;

    fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    fn generate<R: Rng + ?Sized>(&self, state: &usize, _action: &[f64], rng: &mut R) -> GenerativeOutcome<usize> {
        let next = usize::from(rng.random::<f64>() >= self.config.transition[*state][0]);
        let observation = usize::from(rng.random::<f64>() >= self.config.observation[next][0]);
        GenerativeOutcome { next_state: next, observation, reward: next as f64, terminal: false }
    }

    fn observation_likelihood(&self, _state: &usize, _action: &[f64], next: &usize, observation: usize) -> Option<f64> {
        Some(self.config.observation[*next][observation])
    }

    fn sample_initial_state<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        usize::from(rng.random::<f64>() >= self.config.prior[0])
    }

    /// Stratified prior: particle `i` is state 0 iff `(i + 1/2) / n < prior[0]`.
    fn initial_belief<R: Rng + ?Sized>(&self, _true_state: &usize, n: usize, _rng: &mut R) -> ParticleBelief<usize> {
        let n = n.max(1);
        let particles = (0..n).map(|i| usize::from((i as f64 + 0.5) / n as f64 >= self.config.prior[0])).collect();
        ParticleBelief::uniform(particles).expect("non-empty belief")
    }
}
