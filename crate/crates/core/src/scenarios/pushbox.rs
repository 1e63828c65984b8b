//! Pushbox2D: push a puck into a goal circle without touching the walls.
//!
//! The robot moves by a displacement in `[-1, 1]^2`. If its swept disk
//! overlaps the puck, the puck is pushed along the contact normal by
//! `push_gain` times the penetration depth, plus truncated-normal noise per
//! axis. Either disk touching the arena boundary ends the episode with the
//! collision penalty; the puck centre entering the goal circle ends it with
//! the goal reward. The step penalty is added on every step, including the
//! final one.
//!
//! Observation `2 * quadrant + contact`: the quadrant of the robot-to-puck
//! bearing (reported correctly with `bearing_accuracy`, otherwise a uniformly
//! chosen other quadrant) and a noise-free contact bit. `|O| = 8`.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::geometry::{distance, Point};
use super::noise::TruncatedNormal;
use crate::pomdp::{GenerativeOutcome, ParticleBelief, ProblemSpec, Scenario, Termination};

pub const QUADRANTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PushboxState {
    pub robot: Point,
    pub puck: Point,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PushboxConfig {
    /// Side length of the square arena `[0, size]^2`.
    pub arena_size: f64,
    pub robot_radius: f64,
    pub puck_radius: f64,
    pub goal_center: Point,
    pub goal_radius: f64,
    pub robot_start: Point,
    /// Initial puck position is uniform over `puck_start_center +- puck_start_half_width`.
    pub puck_start_center: Point,
    pub puck_start_half_width: f64,
    pub push_gain: f64,
    pub push_noise: TruncatedNormal,
    pub bearing_accuracy: f64,
    pub goal_reward: f64,
    pub collision_penalty: f64,
    pub step_penalty: f64,
    pub discount: f64,
    pub max_steps: usize,
    pub max_displacement: f64,
    /// Heuristic leaf constants.
    pub heuristic_step_penalty: f64,
    pub heuristic_goal_reward: f64,
}

impl Default for PushboxConfig {
    fn default() -> Self {
        Self {
            arena_size: 10.0,
            robot_radius: 1.5,
            puck_radius: 1.5,
            goal_center: [7.5, 7.5],
            goal_radius: 1.0,
            robot_start: [2.0, 2.0],
            puck_start_center: [5.0, 5.5],
            puck_start_half_width: 0.75,
            push_gain: 2.0,
            push_noise: TruncatedNormal::new(0.0, 0.1, -0.3, 0.3).expect("valid push noise"),
            bearing_accuracy: 0.85,
            goal_reward: 1000.0,
            collision_penalty: -1000.0,
            step_penalty: -10.0,
            discount: 0.95,
            max_steps: 50,
            max_displacement: 1.0,
            heuristic_step_penalty: -1.0,
            heuristic_goal_reward: 100.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Pushbox {
    config: PushboxConfig,
    spec: ProblemSpec,
}

/// Leaf estimate `(1 - g^(l+1)) / (1 - g) * r_m + g^l * r_g` with `l` the
/// floor of the robot-puck distance.
pub fn pushbox_heuristic(distance: f64, discount: f64, step_penalty: f64, goal_reward: f64) -> f64 {
    let steps = distance.max(0.0).floor() as i32;
    (1.0 - discount.powi(steps + 1)) / (1.0 - discount) * step_penalty + discount.powi(steps) * goal_reward
}

/// Quadrant index of an angle in `[-pi, pi]`.
pub fn bearing_quadrant(angle: f64) -> usize {
    (((angle + PI) / (PI / 2.0)).floor() as usize).min(QUADRANTS - 1)
}

impl Pushbox {
    pub fn new(config: PushboxConfig) -> Result<Self, String> {
        let c = &config;
        if !(c.robot_radius > 0.0 && c.puck_radius > 0.0 && c.arena_size > 2.0 * c.robot_radius.max(c.puck_radius)) {
            return Err("pushbox disks must have positive radius and fit in the arena".into());
        }
        if !(0.0..=1.0).contains(&c.bearing_accuracy) {
            return Err(format!("bearing_accuracy must be a probability, got {}", c.bearing_accuracy));
        }
        let goal_ok = c.goal_radius > 0.0
            && (0..2).all(|k| c.goal_center[k] - c.goal_radius >= 0.0 && c.goal_center[k] + c.goal_radius <= c.arena_size);
        if !goal_ok {
            return Err("goal region must lie inside the arena".into());
        }
        let d = c.max_displacement;
        let spec = ProblemSpec::new(2 * QUADRANTS, c.discount, c.max_steps, vec![-d, -d], vec![d, d])
            .map_err(|e| e.to_string())?;
        Ok(Self { config, spec })
    }

    pub fn config(&self) -> &PushboxConfig {
        &self.config
    }

    /// Whether a disk of `radius` centred at `p` touches the boundary region.
    pub fn hits_boundary(&self, p: Point, radius: f64) -> bool {
        let size = self.config.arena_size;
        p.iter().any(|&c| c - radius <= 0.0 || c + radius >= size)
    }

    pub fn in_goal(&self, puck: Point) -> bool {
        distance(puck, self.config.goal_center) <= self.config.goal_radius
    }

    fn sample_puck<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let c = self.config.puck_start_center;
        let w = self.config.puck_start_half_width;
        if w > 0.0 {
            [c[0] + rng.random_range(-w..w), c[1] + rng.random_range(-w..w)]
        } else {
            c
        }
    }

    /// Robot path from `from` to `to` against a puck at `puck`: returns the
    /// closest point of the path and its distance to the puck.
    fn closest_approach(from: Point, to: Point, puck: Point) -> (Point, f64) {
        let d = [to[0] - from[0], to[1] - from[1]];
        let len2 = d[0] * d[0] + d[1] * d[1];
        let t = if len2 > 0.0 {
            (((puck[0] - from[0]) * d[0] + (puck[1] - from[1]) * d[1]) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let p = [from[0] + t * d[0], from[1] + t * d[1]];
        (p, distance(p, puck))
    }
}

impl Scenario for Pushbox {
    type State = PushboxState;

    fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    fn generate<R: Rng + ?Sized>(&self, s: &PushboxState, action: &[f64], rng: &mut R) -> GenerativeOutcome<PushboxState> {
        let cfg = &self.config;
        let robot = [s.robot[0] + action[0], s.robot[1] + action[1]];
        let contact_dist = cfg.robot_radius + cfg.puck_radius;
        let (closest, gap) = Self::closest_approach(s.robot, robot, s.puck);
        let mut puck = s.puck;
        let contact = gap < contact_dist;
        if contact {
            let penetration = contact_dist - gap;
            let normal = if gap > 1e-12 {
                [(s.puck[0] - closest[0]) / gap, (s.puck[1] - closest[1]) / gap]
            } else {
                let n = action[0].hypot(action[1]);
                if n > 0.0 { [action[0] / n, action[1] / n] } else { [1.0, 0.0] }
            };
            let noise = [cfg.push_noise.sample(rng), cfg.push_noise.sample(rng)];
            for k in 0..2 {
                puck[k] += cfg.push_gain * penetration * normal[k] + noise[k];
            }
        }
        let next = PushboxState { robot, puck };

        let collided = self.hits_boundary(robot, cfg.robot_radius) || self.hits_boundary(puck, cfg.puck_radius);
        let (reward, terminal) = if collided {
            (cfg.collision_penalty + cfg.step_penalty, true)
        } else if self.in_goal(puck) {
            (cfg.goal_reward + cfg.step_penalty, true)
        } else {
            (cfg.step_penalty, false)
        };

        let bearing = (puck[1] - robot[1]).atan2(puck[0] - robot[0]);
        let true_quadrant = bearing_quadrant(bearing);
        let quadrant = if rng.random::<f64>() < cfg.bearing_accuracy {
            true_quadrant
        } else {
            let other = rng.random_range(0..QUADRANTS - 1);
            if other >= true_quadrant { other + 1 } else { other }
        };
        GenerativeOutcome { next_state: next, observation: 2 * quadrant + contact as usize, reward, terminal }
    }

    fn heuristic(&self, s: &PushboxState) -> f64 {
        pushbox_heuristic(
            distance(s.robot, s.puck),
            self.config.discount,
            self.config.heuristic_step_penalty,
            self.config.heuristic_goal_reward,
        )
    }

    fn sample_initial_state<R: Rng + ?Sized>(&self, rng: &mut R) -> PushboxState {
        PushboxState { robot: self.config.robot_start, puck: self.sample_puck(rng) }
    }

    fn initial_belief<R: Rng + ?Sized>(&self, true_state: &PushboxState, n: usize, rng: &mut R) -> ParticleBelief<PushboxState> {
        let particles = (0..n.max(1)).map(|_| PushboxState { robot: true_state.robot, puck: self.sample_puck(rng) }).collect();
        ParticleBelief::uniform(particles).expect("non-empty belief")
    }

    fn termination(&self, outcome: &GenerativeOutcome<PushboxState>) -> Termination {
        let s = &outcome.next_state;
        let collided = self.hits_boundary(s.robot, self.config.robot_radius) || self.hits_boundary(s.puck, self.config.puck_radius);
        if !collided && self.in_goal(s.puck) {
            Termination::Goal
        } else {
            Termination::Failure
        }
    }
}
