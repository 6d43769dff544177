//! Seed derivation. Every random quantity in the crate comes from a
//! `ChaCha20Rng` whose seed is derived here from an explicit user seed.

use rand::SeedableRng;
use rand_chacha::{ChaCha20Rng, ChaCha8Rng};

/// One step of the splitmix64 generator; used as a seed mixer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed number `index` of `base`.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    splitmix64(splitmix64(base) ^ splitmix64(index.wrapping_add(0x5EED)))
}

/// Generator for `seed` on the given stream; streams separate independent
/// uses of one seed (weight init, minibatch order, dropout, ...).
pub fn chacha(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Faster generator for bulk draws (minibatch order, dropout masks).
pub fn chacha8(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub mod streams {
    pub const FEATURES: u64 = 1;
    pub const INIT: u64 = 2;
    pub const TRAIN: u64 = 3;
}
