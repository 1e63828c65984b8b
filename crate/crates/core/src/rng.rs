//! Seeded random streams.
//!
//! Every stochastic operation takes an explicit stream. Sub-streams are derived
//! from a base seed and a path of integer ids (episode, step, iteration,
//! candidate, ...) so that work can be split across threads without changing
//! any drawn value.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The stream type used throughout the crate.
pub type SimRng = ChaCha8Rng;

/// Stream ids used by [`crate::solver::run_episode`].
pub mod purpose {
    pub const ENVIRONMENT: u64 = 0;
    pub const INITIAL_BELIEF: u64 = 1;
    pub const PLANNER: u64 = 2;
    pub const BELIEF_UPDATE: u64 = 3;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a seed with a path of ids into a new 64-bit seed.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(seed), |acc, &id| {
        splitmix64(acc ^ splitmix64(id.wrapping_add(0x5851_F42D_4C95_7F2D)))
    })
}

/// A fresh stream for `seed`.
pub fn stream(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// A sub-stream of `seed` identified by `path`.
pub fn substream(seed: u64, path: &[u64]) -> SimRng {
    SimRng::seed_from_u64(derive_seed(seed, path))
}
