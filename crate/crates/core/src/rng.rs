//! Seed derivation.
//!
//! Every random draw in a trial comes from a ChaCha8 generator keyed by the
//! trial seed. Independent consumers (the permutation, arm sampling, training
//! samples) use separate ChaCha streams of the same key.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type TrialRng = ChaCha8Rng;

/// Stream identifiers for the consumers of a trial seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Permutation = 1,
    ArmSampling = 2,
    Training = 3,
    Instance = 4,
    Resampling = 5,
}

pub fn trial_rng(seed: u64, purpose: Purpose) -> TrialRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose as u64);
    rng
}
