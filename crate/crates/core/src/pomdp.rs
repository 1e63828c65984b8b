//! POMDP problem contract, particle beliefs and belief tracking.
//!
//! A scenario is a black-box generative model: given a state and an action it
//! samples the next state, a discrete observation index and the immediate
//! reward. Beliefs are weighted particle sets updated by sequential importance
//! resampling with systematic resampling.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PomdpError {
    #[error("discount must lie in (0, 1), got {0}")]
    InvalidDiscount(f64),
    #[error("action bounds invalid in dimension {dim}: lower {lower} must be < upper {upper}")]
    InvalidActionBounds { dim: usize, lower: f64, upper: f64 },
    #[error("action bound vectors must both have length {expected}, got {lower} and {upper}")]
    ActionBoundLength { expected: usize, lower: usize, upper: usize },
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("observation {observation} out of range for {count} observations")]
    ObservationOutOfRange { observation: usize, count: usize },
    #[error("belief needs at least one particle")]
    EmptyBelief,
    #[error("particle and weight counts differ ({particles} vs {weights})")]
    WeightLength { particles: usize, weights: usize },
    #[error("belief weights must be finite, nonnegative and not all zero")]
    DegenerateWeights,
    #[error("particle depletion: no propagated particle matched observation {observation} after {rounds} rounds")]
    ParticleDepletion { observation: usize, rounds: usize },
}

/// Static description of a problem: spaces, discounting and horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub action_dim: usize,
    pub observation_count: usize,
    pub discount: f64,
    pub max_episode_steps: usize,
    pub action_lower: Vec<f64>,
    pub action_upper: Vec<f64>,
}

impl ProblemSpec {
    pub fn new(
        observation_count: usize,
        discount: f64,
        max_episode_steps: usize,
        action_lower: Vec<f64>,
        action_upper: Vec<f64>,
    ) -> Result<Self, PomdpError> {
        let action_dim = action_lower.len();
        if action_dim == 0 {
            return Err(PomdpError::NonPositive("action_dim"));
        }
        if action_upper.len() != action_dim {
            return Err(PomdpError::ActionBoundLength {
                expected: action_dim,
                lower: action_lower.len(),
                upper: action_upper.len(),
            });
        }
        if observation_count == 0 {
            return Err(PomdpError::NonPositive("observation_count"));
        }
        if max_episode_steps == 0 {
            return Err(PomdpError::NonPositive("max_episode_steps"));
        }
        if !(discount > 0.0 && discount < 1.0) {
            return Err(PomdpError::InvalidDiscount(discount));
        }
        for (dim, (&lower, &upper)) in action_lower.iter().zip(&action_upper).enumerate() {
            if !(lower < upper) {
                return Err(PomdpError::InvalidActionBounds { dim, lower, upper });
            }
        }
        Ok(Self {
            action_dim,
            observation_count,
            discount,
            max_episode_steps,
            action_lower,
            action_upper,
        })
    }

    /// Clamps `action` componentwise into the action box, in place.
    pub fn clamp_action(&self, action: &mut [f64]) {
        debug_assert_eq!(action.len(), self.action_dim);
        for ((a, &lo), &hi) in action.iter_mut().zip(&self.action_lower).zip(&self.action_upper) {
            *a = a.clamp(lo, hi);
        }
    }

    pub fn clamped(&self, action: &[f64]) -> Vec<f64> {
        let mut out = action.to_vec();
        self.clamp_action(&mut out);
        out
    }

    pub fn check_observation(&self, observation: usize) -> Result<(), PomdpError> {
        if observation < self.observation_count {
            Ok(())
        } else {
            Err(PomdpError::ObservationOutOfRange { observation, count: self.observation_count })
        }
    }
}

/// One draw from the generative model.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerativeOutcome<S> {
    pub next_state: S,
    pub observation: usize,
    pub reward: f64,
    pub terminal: bool,
}

/// How an episode ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Goal,
    Failure,
    StepLimit,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Termination::Goal => "goal",
            Termination::Failure => "failure",
            Termination::StepLimit => "step_limit",
        })
    }
}

impl std::str::FromStr for Termination {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "goal" => Ok(Termination::Goal),
            "failure" => Ok(Termination::Failure),
            "step_limit" => Ok(Termination::StepLimit),
            other => Err(format!("unknown termination `{other}`")),
        }
    }
}

/// A POMDP given through its generative model.
///
/// Implementations are immutable after construction; every bit of mutable
/// simulation state flows through the arguments, so one scenario value can be
/// shared by any number of workers.
pub trait Scenario: Send + Sync {
    type State: Clone + Send + Sync + std::fmt::Debug;

    fn spec(&self) -> &ProblemSpec;

    /// Samples `(s', o, r, terminal)` for `action`, which the caller has
    /// already clamped into the action box.
    fn generate<R: Rng + ?Sized>(
        &self,
        state: &Self::State,
        action: &[f64],
        rng: &mut R,
    ) -> GenerativeOutcome<Self::State>;

    /// Leaf value estimate for a trajectory that ends without terminating.
    fn heuristic(&self, _state: &Self::State) -> f64 {
        0.0
    }

    /// Exact `P(o | s, a, s')` when the scenario can provide it. When `None`,
    /// belief updates fall back to the indicator of the simulated observation.
    fn observation_likelihood(
        &self,
        _state: &Self::State,
        _action: &[f64],
        _next_state: &Self::State,
        _observation: usize,
    ) -> Option<f64> {
        None
    }

    /// Draws the hidden initial state of an episode.
    fn sample_initial_state<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::State;

    /// The agent's initial belief given what it may know about `true_state`.
    fn initial_belief<R: Rng + ?Sized>(
        &self,
        true_state: &Self::State,
        particle_count: usize,
        rng: &mut R,
    ) -> ParticleBelief<Self::State>;

    /// Classifies a terminal outcome.
    fn termination(&self, _outcome: &GenerativeOutcome<Self::State>) -> Termination {
        Termination::Goal
    }
}

/// Weighted particle approximation of a belief.
#[derive(Debug, Clone)]
pub struct ParticleBelief<S> {
    particles: Vec<S>,
    weights: Vec<f64>,
    cumulative: Vec<f64>,
    uniform: bool,
}

impl<S> ParticleBelief<S> {
    /// Builds a belief from unnormalized weights.
    pub fn new(particles: Vec<S>, weights: Vec<f64>) -> Result<Self, PomdpError> {
        if particles.is_empty() {
            return Err(PomdpError::EmptyBelief);
        }
        if particles.len() != weights.len() {
            return Err(PomdpError::WeightLength { particles: particles.len(), weights: weights.len() });
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(PomdpError::DegenerateWeights);
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(PomdpError::DegenerateWeights);
        }
        let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let mut acc = 0.0;
        let cumulative = weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        Ok(Self { particles, weights, cumulative, uniform: false })
    }

    /// Equally weighted belief.
    pub fn uniform(particles: Vec<S>) -> Result<Self, PomdpError> {
        if particles.is_empty() {
            return Err(PomdpError::EmptyBelief);
        }
        let n = particles.len();
        let w = 1.0 / n as f64;
        Ok(Self {
            particles,
            weights: vec![w; n],
            cumulative: (1..=n).map(|i| i as f64 / n as f64).collect(),
            uniform: true,
        })
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn particles(&self) -> &[S] {
        &self.particles
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Draws a particle with probability proportional to its weight.
    pub fn sample_state<R: Rng + ?Sized>(&self, rng: &mut R) -> &S {
        &self.particles[self.sample_index(rng)]
    }

    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let n = self.particles.len();
        if n == 1 {
            return 0;
        }
        if self.uniform {
            return rng.random_range(0..n);
        }
        let u: f64 = rng.random::<f64>();
        // First index whose cumulative weight exceeds u; zero-weight particles
        // share their predecessor's cumulative value and are never selected.
        let idx = self.cumulative.partition_point(|&c| c <= u);
        idx.min(n - 1)
    }

    /// Probability mass on particles satisfying `pred`.
    pub fn mass_where(&self, mut pred: impl FnMut(&S) -> bool) -> f64 {
        self.particles.iter().zip(&self.weights).filter(|(p, _)| pred(p)).map(|(_, w)| w).sum()
    }
}

/// Systematic resampling: one uniform offset, `count` evenly spaced pointers.
pub fn systematic_resample<R: Rng + ?Sized>(weights: &[f64], count: usize, rng: &mut R) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    let step = total / count as f64;
    let mut pointer = rng.random::<f64>() * step;
    let mut out = Vec::with_capacity(count);
    let mut acc = 0.0;
    let mut idx = 0usize;
    let last_positive = weights.iter().rposition(|&w| w > 0.0).unwrap_or(0);
    for _ in 0..count {
        while idx < last_positive && acc + weights[idx] <= pointer {
            acc += weights[idx];
            idx += 1;
        }
        out.push(idx);
        pointer += step;
    }
    out
}

/// Parameters of the SIR update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SirSettings {
    pub target_count: usize,
    pub max_rounds: usize,
}

impl Default for SirSettings {
    fn default() -> Self {
        Self { target_count: 10_000, max_rounds: 10 }
    }
}

/// Sequential importance resampling update `b' = tau(b, a, o)`.
///
/// Each particle is propagated through the generative model and weighted by
/// `P(o | s, a, s')` when the scenario exposes it, otherwise by whether the
/// simulated observation equals `observation`. The update is only invoked
/// after a non-terminal step, so propagations that terminate are inconsistent
/// with what the agent perceived and receive zero weight. If every weight is
/// zero the propagation is redrawn, up to `max_rounds` times.
pub fn sir_update<S: Scenario, R: Rng + ?Sized>(
    scenario: &S,
    belief: &ParticleBelief<S::State>,
    action: &[f64],
    observation: usize,
    rng: &mut R,
    settings: SirSettings,
) -> Result<ParticleBelief<S::State>, PomdpError> {
    scenario.spec().check_observation(observation)?;
    if settings.target_count == 0 {
        return Err(PomdpError::NonPositive("target_count"));
    }
    let rounds = settings.max_rounds.max(1);
    for _ in 0..rounds {
        let mut propagated = Vec::with_capacity(belief.len());
        let mut weights = Vec::with_capacity(belief.len());
        for (particle, &prior) in belief.particles.iter().zip(&belief.weights) {
            if prior <= 0.0 {
                continue;
            }
            let outcome = scenario.generate(particle, action, rng);
            let likelihood = if outcome.terminal {
                0.0
            } else {
                scenario
                    .observation_likelihood(particle, action, &outcome.next_state, observation)
                    .unwrap_or(if outcome.observation == observation { 1.0 } else { 0.0 })
            };
            propagated.push(outcome.next_state);
            weights.push(prior * likelihood);
        }
        if weights.iter().any(|&w| w > 0.0) {
            let picks = systematic_resample(&weights, settings.target_count, rng);
            let particles = picks.into_iter().map(|i| propagated[i].clone()).collect();
            return ParticleBelief::uniform(particles);
        }
    }
    Err(PomdpError::ParticleDepletion { observation, rounds })
}

/// `sum_t gamma^t r_t` with `t` starting at 0.
pub fn discounted_return(rewards: &[f64], gamma: f64) -> f64 {
    let mut discount = 1.0;
    let mut total = 0.0;
    for &r in rewards {
        total += discount * r;
        discount *= gamma;
    }
    total
}

/// Outcome of one simulated episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub seed: u64,
    pub discounted_return: f64,
    pub steps: usize,
    pub termination: Termination,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}
