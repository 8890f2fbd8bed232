//! Deterministic seed splitting.
//!
//! A unit seed is `splitmix64(master ^ splitmix64(index + 1))`. Nested
//! splits (sweep point, then frame batch) apply the rule repeatedly.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for work unit `index` under `master`.
pub const fn derive(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index.wrapping_add(1)))
}

/// The RNG used for all simulation randomness.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
