//! Online POMDP planning for continuous action spaces.
//!
//! The planner searches over finite-depth policy trees with a cross-entropy
//! optimizer. Candidate trees are sampled lazily: a node's action is drawn from
//! its marginal only when a simulated trajectory first reaches it, and the
//! sampling distribution is refit by marginal maximum likelihood on whatever
//! components the elite candidates actually carry.
//!
//! Module map:
//! - [`pomdp`]: problem contract, particle beliefs, SIR belief update, returns.
//! - [`policy_tree`]: breadth-first node layout and the parameter vector.
//! - [`cross_entropy`]: diagonal Gaussian, elite selection, basic and lazy updates.
//! - [`solver`]: policy evaluation, the per-step planning loop, episodes.
//! - [`scenarios`]: benchmark environments and oracle toys.

// Negated float comparisons are used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cpu_time;
pub mod cross_entropy;
pub mod policy_tree;
pub mod pomdp;
pub mod rng;
pub mod scenarios;
pub mod solver;

pub use cross_entropy::{
    select_elites, update_basic, update_lazy, CeError, DiagonalGaussian, EliteSet, ScoredSample,
};
pub use policy_tree::{node_count, NodeIndex, PolicyParameterVector, PolicyTreeShape, TreeError};
pub use pomdp::{
    discounted_return, sir_update, EpisodeRecord, GenerativeOutcome, ParticleBelief, PomdpError,
    ProblemSpec, Scenario, Termination,
};
pub use rng::SimRng;
pub use solver::{
    evaluate_policy, plan_step, run_episode, run_episode_with, Budget, PlanningResult, SolverConfig, SolverError,
    Variant,
};
