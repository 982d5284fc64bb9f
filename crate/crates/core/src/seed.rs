//! Seed derivation.
//!
//! Every random stream in a run is derived from the master seed with
//! [`derive`], so two runs with the same master seed draw identical numbers
//! regardless of how many values each stage consumes.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for `stream` under `parent`.
pub fn derive(parent: u64, stream: u64) -> u64 {
    mix(mix(parent) ^ stream.wrapping_mul(0xD605_BBB5_8C8A_BBFD))
}

/// Per-iteration seed: `mix(master + iteration)`.
pub fn iteration_seed(master: u64, iteration: usize) -> u64 {
    mix(master.wrapping_add(iteration as u64))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
