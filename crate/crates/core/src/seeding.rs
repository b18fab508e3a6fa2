//! Deterministic seed derivation. Every random stream in the crate is a
//! ChaCha8 generator keyed by a base seed mixed with a context label.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use xxhash_rust::xxh3::xxh3_64_with_seed;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Mixes `seed` with an ordered list of context parts.
pub fn derive(seed: u64, parts: &[&[u8]]) -> u64 {
    let mut h = seed;
    for part in parts {
        h = xxh3_64_with_seed(part, h ^ 0x9E37_79B9_7F4A_7C15);
    }
    h
}

pub fn derive_rng(seed: u64, parts: &[&[u8]]) -> ChaCha8Rng {
    rng(derive(seed, parts))
}
