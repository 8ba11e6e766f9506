//! Seed derivation.
//!
//! Every random decision in a run hangs off one master seed. Each consumer
//! gets its own stream via [`derive`], so adding a consumer never shifts the
//! numbers another one sees.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags for the consumers of the master seed.
pub mod stream {
    pub const FPS: u64 = 1;
    pub const QUERIES: u64 = 2;
    pub const GENERATOR_INIT: u64 = 3;
    pub const DISCRIMINATOR_INIT: u64 = 4;
    pub const BATCHES: u64 = 5;
    pub const CENSUS_PROBES: u64 = 6;
    pub const SURFACE_SAMPLES: u64 = 7;
    /// Synthetic fixtures only: outlier injection.
    pub const OUTLIERS: u64 = 8;
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Derives an independent sub-seed from `(seed, tag)`.
pub fn derive(seed: u64, tag: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ tag.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rng_for(seed: u64, tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(seed, tag))
}
