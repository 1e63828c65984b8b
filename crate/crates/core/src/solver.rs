//! The online planning loop.
//!
//! Each planning step resets the sampling distribution to
//! `(mu_init, sigma2_init)` and runs cross-entropy iterations over depth-`M`
//! policy trees until the budget is spent. A trajectory executes the actions
//! at tree depths `0..M`, descends on each observation, and closes with the
//! scenario heuristic unless it terminated:
//!
//! `R = sum_{m=1..M} gamma^(m-1) r_m + gamma^M h(s_M)`.
//!
//! The executed action is the root block of the final mean, clamped into the
//! action box.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cpu_time::CpuStopwatch;
use crate::cross_entropy::{
    sample_full, sample_node_lazy, select_elites, update_basic, update_lazy, CeError, DiagonalGaussian, ScoredSample,
};
use crate::policy_tree::{root_action, NodeIndex, PolicyParameterVector, PolicyTreeShape, TreeError};
use crate::pomdp::{sir_update, EpisodeRecord, ParticleBelief, PomdpError, Scenario, SirSettings, Termination};
use crate::rng::{purpose, substream, SimRng};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("basic evaluation needs a fully present policy, node {0} is absent")]
    AbsentNode(usize),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Ce(#[from] CeError),
    #[error(transparent)]
    Pomdp(#[from] PomdpError),
}

/// Planning budget per step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Budget {
    /// CPU seconds, checked between iterations.
    CpuSeconds(f64),
    /// An exact number of CE iterations.
    CeIterations(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Sample node actions on first visit; refit from present components.
    Lazy,
    /// Sample complete trees up front; refit from complete vectors.
    Basic,
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Variant::Lazy => "lazy",
            Variant::Basic => "basic",
        })
    }
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lazy" => Ok(Variant::Lazy),
            "basic" => Ok(Variant::Basic),
            other => Err(format!("unknown variant `{other}` (expected lazy or basic)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Candidate policies per iteration (N).
    pub candidates: usize,
    /// Trajectories per candidate (L).
    pub trajectories: usize,
    /// Elites kept per iteration (K).
    pub elites: usize,
    /// Policy tree depth (M).
    pub depth: usize,
    pub alpha: f64,
    pub sigma2_init: f64,
    /// Initial mean, either one action (tiled over all nodes) or a full
    /// parameter vector. Zero if absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu_init: Option<Vec<f64>>,
    pub budget: Budget,
    pub variant: Variant,
    pub particle_count: usize,
    pub variance_floor: f64,
    pub depletion_rounds: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            candidates: 30,
            trajectories: 20,
            elites: 5,
            depth: 2,
            alpha: 0.8,
            sigma2_init: 1.0,
            mu_init: None,
            budget: Budget::CpuSeconds(0.25),
            variant: Variant::Lazy,
            particle_count: 10_000,
            variance_floor: 1e-8,
            depletion_rounds: 10,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |msg: String| Err(SolverError::InvalidConfig(msg));
        if self.candidates == 0 {
            return bad("candidates (N) must be at least 1".into());
        }
        if self.elites == 0 || self.elites > self.candidates {
            return bad(format!("elites (K) must satisfy 1 <= K <= N, got K={} N={}", self.elites, self.candidates));
        }
        if self.trajectories == 0 {
            return bad("trajectories (L) must be at least 1".into());
        }
        if self.depth == 0 {
            return bad("depth (M) must be at least 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad(format!("alpha must lie in (0, 1], got {}", self.alpha));
        }
        if !(self.sigma2_init >= 0.0 && self.sigma2_init.is_finite()) {
            return bad(format!("sigma2_init must be finite and nonnegative, got {}", self.sigma2_init));
        }
        if !(self.variance_floor >= 0.0 && self.variance_floor.is_finite()) {
            return bad(format!("variance_floor must be finite and nonnegative, got {}", self.variance_floor));
        }
        if self.particle_count == 0 {
            return bad("particle_count must be at least 1".into());
        }
        match self.budget {
            Budget::CpuSeconds(s) if !(s > 0.0 && s.is_finite()) => bad(format!("cpu_seconds budget must be positive, got {s}")),
            Budget::CeIterations(0) => bad("ce_iterations budget must be at least 1".into()),
            _ => Ok(()),
        }
    }

    pub fn shape_for<S: Scenario>(&self, scenario: &S) -> Result<PolicyTreeShape, SolverError> {
        Ok(PolicyTreeShape::for_problem(self.depth, scenario.spec())?)
    }

    /// The initial distribution for `shape`.
    pub fn initial_distribution(&self, shape: &PolicyTreeShape) -> Result<DiagonalGaussian, SolverError> {
        let dim = shape.parameter_dim();
        let mu = match &self.mu_init {
            None => vec![0.0; dim],
            Some(v) if v.len() == dim => v.clone(),
            Some(v) if v.len() == shape.action_dim() => v.iter().copied().cycle().take(dim).collect(),
            Some(v) => {
                return Err(SolverError::InvalidConfig(format!(
                    "mu_init has length {}, expected {} (one action) or {} (full tree)",
                    v.len(),
                    shape.action_dim(),
                    dim
                )))
            }
        };
        Ok(DiagonalGaussian::isotropic(mu, self.sigma2_init)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanningResult {
    pub chosen_action: Vec<f64>,
    pub iterations_run: usize,
    pub final_mu: Vec<f64>,
    pub final_sigma2: Vec<f64>,
    pub elapsed_cpu_seconds: f64,
}

/// Monte Carlo value of `theta` under `belief`.
///
/// In [`Variant::Lazy`] absent nodes are drawn from `dist` via `sample_rng`
/// when a trajectory first reaches them; in [`Variant::Basic`] every visited
/// node must already be present. Trajectory noise comes from `sim_rng` only,
/// so a fully present `theta` yields the same value in both modes.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_policy<S: Scenario, R1: Rng + ?Sized, R2: Rng + ?Sized>(
    scenario: &S,
    belief: &ParticleBelief<S::State>,
    mut theta: PolicyParameterVector,
    dist: &DiagonalGaussian,
    trajectories: usize,
    variant: Variant,
    sample_rng: &mut R1,
    sim_rng: &mut R2,
) -> Result<ScoredSample<PolicyParameterVector>, SolverError> {
    let spec = scenario.spec();
    let shape = *theta.shape();
    let gamma = spec.discount;
    let mut action = vec![0.0; spec.action_dim];
    let mut total = 0.0;
    for _ in 0..trajectories {
        let mut state = belief.sample_state(sim_rng).clone();
        let mut node = NodeIndex::ROOT;
        let mut ret = 0.0;
        let mut discount = 1.0;
        let mut terminated = false;
        for _ in 0..shape.depth() {
            let block = match variant {
                Variant::Lazy => sample_node_lazy(&mut theta, node, dist, sample_rng),
                Variant::Basic => theta.action_block(node).ok_or(SolverError::AbsentNode(node.0))?,
            };
            action.copy_from_slice(block);
            spec.clamp_action(&mut action);
            let out = scenario.generate(&state, &action, sim_rng);
            ret += discount * out.reward;
            discount *= gamma;
            if out.terminal {
                terminated = true;
                break;
            }
            debug_assert!(out.observation < shape.observation_count());
            node = shape.child_unchecked(node, out.observation);
            state = out.next_state;
        }
        if !terminated {
            ret += discount * scenario.heuristic(&state);
        }
        total += ret;
    }
    Ok(ScoredSample::new(theta, total / trajectories as f64)?)
}

/// One planning step: CE iterations from the initial distribution until the
/// budget is spent. At least one iteration always completes.
pub fn plan_step<S: Scenario, R: RngCore + ?Sized>(
    scenario: &S,
    belief: &ParticleBelief<S::State>,
    config: &SolverConfig,
    rng: &mut R,
) -> Result<PlanningResult, SolverError> {
    config.validate()?;
    let shape = config.shape_for(scenario)?;
    let mut dist = config.initial_distribution(&shape)?;
    let base = rng.next_u64();
    let watch = CpuStopwatch::start();
    let mut iterations = 0usize;
    loop {
        let mut batch = Vec::with_capacity(config.candidates);
        for c in 0..config.candidates {
            let mut sample_rng: SimRng = substream(base, &[iterations as u64, c as u64, 0]);
            let mut sim_rng: SimRng = substream(base, &[iterations as u64, c as u64, 1]);
            let theta = match config.variant {
                Variant::Lazy => PolicyParameterVector::empty(shape),
                Variant::Basic => PolicyParameterVector::from_full(shape, sample_full(&dist, &mut sample_rng))?,
            };
            batch.push(evaluate_policy(
                scenario,
                belief,
                theta,
                &dist,
                config.trajectories,
                config.variant,
                &mut sample_rng,
                &mut sim_rng,
            )?);
        }
        let elites = select_elites(batch, config.elites)?;
        dist = match config.variant {
            Variant::Lazy => update_lazy(&dist, &elites, config.alpha)?,
            Variant::Basic => update_basic(&dist, &elites, config.alpha)?,
        };
        dist.floor_variance(config.variance_floor);
        iterations += 1;
        let done = match config.budget {
            Budget::CeIterations(n) => iterations >= n,
            Budget::CpuSeconds(s) => watch.elapsed() >= s,
        };
        if done {
            break;
        }
    }
    let elapsed = watch.elapsed();
    let chosen_action = root_action(dist.mu(), scenario.spec());
    let (final_mu, final_sigma2) = dist.into_parts();
    Ok(PlanningResult { chosen_action, iterations_run: iterations, final_mu, final_sigma2, elapsed_cpu_seconds: elapsed })
}

/// Runs one episode with the scenario's step limit.
pub fn run_episode<S: Scenario>(scenario: &S, config: &SolverConfig, seed: u64) -> Result<EpisodeRecord, SolverError> {
    run_episode_with(scenario, config, seed, scenario.spec().max_episode_steps, |_| {})
}

/// Runs one episode with an explicit step limit, reporting every planning
/// step to `observe`.
///
/// Randomness is split into independent streams for the environment, the
/// initial belief, the planner and the belief update, all derived from
/// `seed`. Particle depletion ends the episode as a failure with a
/// diagnostic.
pub fn run_episode_with<S: Scenario>(
    scenario: &S,
    config: &SolverConfig,
    seed: u64,
    max_steps: usize,
    mut observe: impl FnMut(&PlanningResult),
) -> Result<EpisodeRecord, SolverError> {
    config.validate()?;
    let mut env_rng = substream(seed, &[purpose::ENVIRONMENT]);
    let mut belief_rng = substream(seed, &[purpose::INITIAL_BELIEF]);
    let mut planner_rng = substream(seed, &[purpose::PLANNER]);
    let mut update_rng = substream(seed, &[purpose::BELIEF_UPDATE]);
    let spec = scenario.spec();
    let sir = SirSettings { target_count: config.particle_count, max_rounds: config.depletion_rounds };

    let mut state = scenario.sample_initial_state(&mut env_rng);
    let mut belief = scenario.initial_belief(&state, config.particle_count, &mut belief_rng);
    let mut ret = 0.0;
    let mut discount = 1.0;
    let record = |ret: f64, steps: usize, termination: Termination, diagnostic: Option<String>| EpisodeRecord {
        seed,
        discounted_return: ret,
        steps,
        termination,
        diagnostic,
    };

    for step in 0..max_steps {
        let plan = plan_step(scenario, &belief, config, &mut planner_rng)?;
        observe(&plan);
        let out = scenario.generate(&state, &plan.chosen_action, &mut env_rng);
        ret += discount * out.reward;
        discount *= spec.discount;
        if out.terminal {
            return Ok(record(ret, step + 1, scenario.termination(&out), None));
        }
        if step + 1 == max_steps {
            break;
        }
        match sir_update(scenario, &belief, &plan.chosen_action, out.observation, &mut update_rng, sir) {
            Ok(next) => belief = next,
            Err(e @ PomdpError::ParticleDepletion { .. }) => {
                return Ok(record(ret, step + 1, Termination::Failure, Some(e.to_string())));
            }
            Err(e) => return Err(e.into()),
        }
        state = out.next_state;
    }
    Ok(record(ret, max_steps, Termination::StepLimit, None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pomdp::{GenerativeOutcome, ProblemSpec};
    use crate::rng::stream;
    use crate::scenarios::OneStepToy;

    /// Configurable stub: constant reward, optional termination, `|O|`
    /// observations drawn uniformly, constant heuristic.
    struct Stub {
        spec: ProblemSpec,
        reward: f64,
        terminal: bool,
        heuristic: f64,
    }

    impl Stub {
        fn new(obs: usize, reward: f64, terminal: bool, heuristic: f64) -> Self {
            Self { spec: ProblemSpec::new(obs, 0.9, 5, vec![-1.0], vec![1.0]).unwrap(), reward, terminal, heuristic }
        }
    }

    impl Scenario for Stub {
        type State = ();
        fn spec(&self) -> &ProblemSpec {
            &self.spec
        }
        fn generate<R: Rng + ?Sized>(&self, _: &(), _: &[f64], rng: &mut R) -> GenerativeOutcome<()> {
            let observation = rng.random_range(0..self.spec.observation_count);
            GenerativeOutcome { next_state: (), observation, reward: self.reward, terminal: self.terminal }
        }
        fn heuristic(&self, _: &()) -> f64 {
            self.heuristic
        }
        fn sample_initial_state<R: Rng + ?Sized>(&self, _: &mut R) {}
        fn initial_belief<R: Rng + ?Sized>(&self, _: &(), n: usize, _: &mut R) -> ParticleBelief<()> {
            ParticleBelief::uniform(vec![(); n]).unwrap()
        }
    }

    fn iters(n: usize) -> SolverConfig {
        SolverConfig {
            candidates: 10,
            trajectories: 3,
            elites: 3,
            depth: 2,
            budget: Budget::CeIterations(n),
            particle_count: 10,
            ..Default::default()
        }
    }

    fn one_particle() -> ParticleBelief<()> {
        ParticleBelief::uniform(vec![()]).unwrap()
    }

    #[test]
    fn terminal_first_step_value() {
        let s = Stub::new(2, 10.0, true, 99.0);
        let shape = PolicyTreeShape::new(3, 2, 1).unwrap();
        let dist = DiagonalGaussian::isotropic(vec![0.0; shape.parameter_dim()], 1.0).unwrap();
        let v = evaluate_policy(&s, &one_particle(), PolicyParameterVector::empty(shape), &dist, 7, Variant::Lazy, &mut stream(0), &mut stream(1))
            .unwrap();
        assert_eq!(v.value(), 10.0);
    }

    #[test]
    fn depth_one_heuristic_value() {
        let s = Stub::new(2, 0.0, false, 4.0);
        let shape = PolicyTreeShape::new(1, 2, 1).unwrap();
        let dist = DiagonalGaussian::isotropic(vec![0.0; shape.parameter_dim()], 1.0).unwrap();
        let v = evaluate_policy(&s, &one_particle(), PolicyParameterVector::empty(shape), &dist, 5, Variant::Lazy, &mut stream(0), &mut stream(1))
            .unwrap();
        assert!((v.value() - 0.9 * 4.0).abs() < 1e-12);
    }

    #[test]
    fn lazy_and_basic_agree_on_full_theta() {
        let toy = OneStepToy::default();
        let shape = PolicyTreeShape::new(1, 1, 2).unwrap();
        let dist = DiagonalGaussian::isotropic(vec![0.0; 4], 1.0).unwrap();
        let theta = PolicyParameterVector::from_full(shape, vec![1.0, -0.5, 3.0, 3.0]).unwrap();
        let belief = one_particle();
        let a = evaluate_policy(&toy, &belief, theta.clone(), &dist, 1, Variant::Lazy, &mut stream(0), &mut stream(5)).unwrap();
        let b = evaluate_policy(&toy, &belief, theta, &dist, 1, Variant::Basic, &mut stream(0), &mut stream(5)).unwrap();
        assert_eq!(a.value().to_bits(), b.value().to_bits());
    }

    #[test]
    fn basic_rejects_absent_nodes() {
        let toy = OneStepToy::default();
        let shape = PolicyTreeShape::new(1, 1, 2).unwrap();
        let dist = DiagonalGaussian::isotropic(vec![0.0; 4], 1.0).unwrap();
        let err = evaluate_policy(&toy, &one_particle(), PolicyParameterVector::empty(shape), &dist, 1, Variant::Basic, &mut stream(0), &mut stream(0))
            .unwrap_err();
        assert_eq!(err, SolverError::AbsentNode(0));
    }

    #[test]
    fn lazy_presence_is_sparse() {
        let s = Stub::new(3, -1.0, false, 0.0);
        let (depth, l) = (4, 6);
        let shape = PolicyTreeShape::new(depth, 3, 1).unwrap();
        let dist = DiagonalGaussian::isotropic(vec![0.0; shape.parameter_dim()], 1.0).unwrap();
        for seed in 0..50 {
            let v = evaluate_policy(&s, &one_particle(), PolicyParameterVector::empty(shape), &dist, l, Variant::Lazy, &mut stream(seed), &mut stream(seed + 100))
                .unwrap();
            let bound = shape.node_count().min(l * (depth + 1) - (l - 1));
            assert!(v.theta.present_node_count() <= bound);
            assert!(v.theta.is_present(NodeIndex::ROOT));
        }
    }

    #[test]
    fn single_iteration_budget() {
        let toy = OneStepToy::default();
        let r = plan_step(&toy, &one_particle(), &iters(1), &mut stream(0)).unwrap();
        assert_eq!(r.iterations_run, 1);
    }

    #[test]
    fn tiny_cpu_budget_still_runs_one_iteration() {
        let toy = OneStepToy::default();
        let cfg = SolverConfig { budget: Budget::CpuSeconds(1e-9), ..iters(1) };
        let r = plan_step(&toy, &one_particle(), &cfg, &mut stream(0)).unwrap();
        assert!(r.iterations_run >= 1);
    }

    #[test]
    fn zero_variance_keeps_mean() {
        let toy = OneStepToy::default();
        let cfg = SolverConfig {
            sigma2_init: 0.0,
            variance_floor: 0.0,
            mu_init: Some(vec![9.0, 0.25]),
            ..iters(7)
        };
        let r = plan_step(&toy, &one_particle(), &cfg, &mut stream(3)).unwrap();
        assert_eq!(r.chosen_action, vec![5.0, 0.25]);
    }

    #[test]
    fn converges_on_toy() {
        let toy = OneStepToy::default();
        let cfg = SolverConfig {
            candidates: 100,
            trajectories: 1,
            elites: 10,
            depth: 1,
            alpha: 0.8,
            budget: Budget::CeIterations(50),
            ..iters(50)
        };
        let r = plan_step(&toy, &one_particle(), &cfg, &mut stream(21)).unwrap();
        let err = r.chosen_action.iter().zip(toy.optimum()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!(err <= 0.05, "error {err}");
    }

    // Absent components hold NaN in test builds; a read would surface as a
    // non-finite value or a NaN mean.
    #[test]
    fn lazy_planning_never_reads_absent_components() {
        let s = Stub::new(3, -1.0, false, 0.5);
        let cfg = SolverConfig { depth: 3, ..iters(5) };
        let r = plan_step(&s, &one_particle(), &cfg, &mut stream(9)).unwrap();
        assert!(r.final_mu.iter().chain(&r.final_sigma2).all(|v| v.is_finite()));
    }

    #[test]
    fn episode_all_terminal() {
        let s = Stub::new(1, 10.0, true, 0.0);
        let rec = run_episode(&s, &iters(2), 4).unwrap();
        assert_eq!((rec.discounted_return, rec.steps, rec.termination), (10.0, 1, Termination::Goal));
    }

    #[test]
    fn episode_zero_steps() {
        let s = Stub::new(1, 10.0, true, 0.0);
        let rec = run_episode_with(&s, &iters(2), 4, 0, |_| {}).unwrap();
        assert_eq!((rec.discounted_return, rec.steps, rec.termination), (0.0, 0, Termination::StepLimit));
    }

    #[test]
    fn episode_is_deterministic() {
        let s = Stub::new(2, -1.0, false, 0.0);
        let a = run_episode(&s, &iters(3), 17).unwrap();
        let b = run_episode(&s, &iters(3), 17).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.steps, 5);
        assert_eq!(a.termination, Termination::StepLimit);
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig { elites: 40, ..iters(1) }.validate().is_err());
        assert!(SolverConfig { alpha: 0.0, ..iters(1) }.validate().is_err());
        assert!(SolverConfig { budget: Budget::CeIterations(0), ..iters(1) }.validate().is_err());
        assert!(iters(1).validate().is_ok());
    }

    #[test]
    fn mu_init_is_tiled() {
        let shape = PolicyTreeShape::new(1, 2, 2).unwrap();
        let cfg = SolverConfig { mu_init: Some(vec![1.0, 2.0]), ..iters(1) };
        let d = cfg.initial_distribution(&shape).unwrap();
        assert_eq!(d.mu(), &[1.0, 2.0, 1.0, 2.0, 1.0, 2.0]);
        let bad = SolverConfig { mu_init: Some(vec![1.0; 5]), ..iters(1) };
        assert!(bad.initial_distribution(&shape).is_err());
    }
}
