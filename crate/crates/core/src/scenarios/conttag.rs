//! ContTag: tag a fleeing opponent with a noisy, direction-dependent sensor.
//!
//! Actions live in `[-pi, pi] x [-1, 1]`. A second component in `[0, 1]`
//! selects TAG; otherwise the first component turns the agent, which then
//! steps one unit along its new heading. The opponent steps one unit directly
//! away from the agent plus truncated-normal positional noise. Any move whose
//! path leaves free space is cancelled for that entity.
//!
//! Observation 1 is DETECTED, 0 is NOT DETECTED. Inside the forward half-plane
//! of the agent the opponent is detected with probability
//! `1 - |bearing - heading| / pi`; outside it is never detected.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::geometry::{distance, wrap_angle, Point, Polygon};
use super::noise::TruncatedNormal;
use crate::pomdp::{GenerativeOutcome, ParticleBelief, ProblemSpec, Scenario, Termination};

pub const NOT_DETECTED: usize = 0;
pub const DETECTED: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContTagState {
    pub agent: Point,
    pub heading: f64,
    pub opponent: Point,
}

/// Default free space: a 10 x 5 rectangle with a 3 x 1.5 notch removed from
/// its upper-right corner.
pub fn default_free_space() -> Polygon {
    Polygon::new(vec![[0.0, 0.0], [10.0, 0.0], [10.0, 3.5], [7.0, 3.5], [7.0, 5.0], [0.0, 5.0]])
        .expect("valid default map")
}

fn default_noise() -> TruncatedNormal {
    TruncatedNormal::new(0.0, PI / 8.0, -PI / 8.0, PI / 8.0).expect("valid default noise")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContTagConfig {
    pub free_space: Polygon,
    pub discount: f64,
    pub max_steps: usize,
    pub tag_radius: f64,
    pub tag_reward: f64,
    pub tag_penalty: f64,
    pub step_penalty: f64,
    pub agent_step: f64,
    pub opponent_step: f64,
    pub opponent_noise: TruncatedNormal,
    pub initial_heading: f64,
}

impl Default for ContTagConfig {
    fn default() -> Self {
        Self {
            free_space: default_free_space(),
            discount: 0.95,
            max_steps: 90,
            tag_radius: 1.0,
            tag_reward: 10.0,
            tag_penalty: -10.0,
            step_penalty: -1.0,
            agent_step: 1.0,
            opponent_step: 1.0,
            opponent_noise: default_noise(),
            initial_heading: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ContTag {
    config: ContTagConfig,
    spec: ProblemSpec,
}

impl ContTag {
    pub fn new(config: ContTagConfig) -> Result<Self, String> {
        let spec = ProblemSpec::new(2, config.discount, config.max_steps, vec![-PI, -1.0], vec![PI, 1.0])
            .map_err(|e| e.to_string())?;
        Ok(Self { config, spec })
    }

    pub fn config(&self) -> &ContTagConfig {
        &self.config
    }

    fn sample_free_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let (lo, hi) = self.config.free_space.bounding_box();
        loop {
            let p = [rng.random_range(lo[0]..hi[0]), rng.random_range(lo[1]..hi[1])];
            if self.config.free_space.contains(p) {
                return p;
            }
        }
    }

    /// Probability that the sensor reports DETECTED in `state`.
    pub fn detection_probability(state: &ContTagState) -> f64 {
        let bearing = (state.opponent[1] - state.agent[1]).atan2(state.opponent[0] - state.agent[0]);
        let relative = wrap_angle(bearing - state.heading);
        if relative.abs() <= PI / 2.0 {
            1.0 - relative.abs() / PI
        } else {
            0.0
        }
    }

    pub fn is_tag(action: &[f64]) -> bool {
        action[1] >= 0.0
    }
}

/// Leaf estimate: `(1 - g^l) / (1 - g) * r_m + g^l * r_t` with `l` the floor
/// of the agent-opponent distance.
pub fn conttag_heuristic(distance: f64, discount: f64, step_penalty: f64, tag_reward: f64) -> f64 {
    let steps = distance.max(0.0).floor() as i32;
    let g = discount.powi(steps);
    (1.0 - g) / (1.0 - discount) * step_penalty + g * tag_reward
}

impl Scenario for ContTag {
    type State = ContTagState;

    fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    fn generate<R: Rng + ?Sized>(&self, s: &ContTagState, action: &[f64], rng: &mut R) -> GenerativeOutcome<ContTagState> {
        let cfg = &self.config;
        let (next, reward, terminal) = if Self::is_tag(action) {
            if distance(s.agent, s.opponent) < cfg.tag_radius {
                (*s, cfg.tag_reward, true)
            } else {
                (*s, cfg.tag_penalty, false)
            }
        } else {
            let heading = wrap_angle(s.heading + action[0]);
            let target = [s.agent[0] + cfg.agent_step * heading.cos(), s.agent[1] + cfg.agent_step * heading.sin()];
            let agent = if cfg.free_space.segment_free(s.agent, target) { target } else { s.agent };

            let flee = (s.opponent[1] - s.agent[1]).atan2(s.opponent[0] - s.agent[0]);
            let ex = cfg.opponent_noise.sample(rng);
            let ey = cfg.opponent_noise.sample(rng);
            let target_o = [
                s.opponent[0] + cfg.opponent_step * flee.cos() + ex,
                s.opponent[1] + cfg.opponent_step * flee.sin() + ey,
            ];
            let opponent = if cfg.free_space.segment_free(s.opponent, target_o) { target_o } else { s.opponent };
            (ContTagState { agent, heading, opponent }, cfg.step_penalty, false)
        };
        let p = Self::detection_probability(&next);
        let observation = if p > 0.0 && rng.random::<f64>() < p { DETECTED } else { NOT_DETECTED };
        GenerativeOutcome { next_state: next, observation, reward, terminal }
    }

    fn heuristic(&self, s: &ContTagState) -> f64 {
        conttag_heuristic(distance(s.agent, s.opponent), self.config.discount, self.config.step_penalty, self.config.tag_reward)
    }

    fn observation_likelihood(&self, _s: &ContTagState, _a: &[f64], next: &ContTagState, observation: usize) -> Option<f64> {
        let p = Self::detection_probability(next);
        Some(if observation == DETECTED { p } else { 1.0 - p })
    }

    fn sample_initial_state<R: Rng + ?Sized>(&self, rng: &mut R) -> ContTagState {
        let agent = self.sample_free_point(rng);
        let opponent = self.sample_free_point(rng);
        ContTagState { agent, heading: self.config.initial_heading, opponent }
    }

    /// The agent knows its own pose; the opponent is uniform over free space.
    fn initial_belief<R: Rng + ?Sized>(&self, true_state: &ContTagState, n: usize, rng: &mut R) -> ParticleBelief<ContTagState> {
        let particles = (0..n.max(1))
            .map(|_| ContTagState { opponent: self.sample_free_point(rng), ..*true_state })
            .collect();
        ParticleBelief::uniform(particles).expect("non-empty belief")
    }

    fn termination(&self, _outcome: &GenerativeOutcome<ContTagState>) -> Termination {
        Termination::Goal
    }
}
