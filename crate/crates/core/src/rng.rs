//! Deterministic random streams.
//!
//! Every trial owns a seed derived from the base seed, and every role inside
//! a trial (environment, policy, ...) gets its own ChaCha stream. Two
//! processes that must see the same channel realisation simply open the same
//! stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random number generator used throughout the crate.
pub type SimRng = ChaCha8Rng;

/// Role of a stream within one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StreamRole {
    /// Channel and accuracy draws seen by the candidate policy. In coupled
    /// mode the oracle reads this stream too.
    Environment,
    /// Channel and accuracy draws of the oracle when not coupled.
    OracleEnvironment,
    /// Internal randomness of the policy (coin flips, posterior samples).
    Policy,
    /// Warm-up slots played by the oracle before slot 1.
    Warmup,
}

impl StreamRole {
    fn id(self) -> u64 {
        match self {
            StreamRole::Environment => 0,
            StreamRole::OracleEnvironment => 1,
            StreamRole::Policy => 2,
            StreamRole::Warmup => 3,
        }
    }
}

/// SplitMix64 finaliser.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of trial `index` under `base_seed`.
pub fn trial_seed(base_seed: u64, index: u64) -> u64 {
    mix64(base_seed.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_add(mix64(index.wrapping_add(1))))
}

/// Opens the stream for `role` under `seed`.
pub fn stream(seed: u64, role: StreamRole) -> SimRng {
    let mut rng = SimRng::seed_from_u64(seed);
    rng.set_stream(role.id());
    rng
}
