//! Deterministic random streams keyed by `(master seed, trial, purpose)`.
//!
//! Each trial gets its own 64-bit seed derived from the master seed with a
//! SplitMix64 mix; each purpose within a trial maps to a separate ChaCha
//! stream of that seed. Streams never depend on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random stream type used throughout the crate.
pub type Stream = ChaCha8Rng;

/// What a stream is used for. Distinct purposes never share randomness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Channel,
    Optimizer,
    TrainingChannel,
    TrainingInit,
    Clustering,
}

impl Purpose {
    fn stream_id(self) -> u64 {
        match self {
            Purpose::Channel => 1,
            Purpose::Optimizer => 2,
            Purpose::TrainingChannel => 3,
            Purpose::TrainingInit => 4,
            Purpose::Clustering => 5,
        }
    }
}

/// SplitMix64 finalizer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `trial` under `master`.
pub fn trial_seed(master: u64, trial: u64) -> u64 {
    splitmix64(master ^ splitmix64(trial.wrapping_mul(0xD1B5_4A32_D192_ED03)))
}

/// Stream for one purpose of one trial.
pub fn stream(trial_seed: u64, purpose: Purpose) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
    rng.set_stream(purpose.stream_id());
    rng
}
