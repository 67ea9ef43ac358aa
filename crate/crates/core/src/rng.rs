//! Seed fan-out. Every stochastic component draws from a ChaCha stream
//! whose seed is derived from a parent seed and a purpose tag.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `parent` and an integer stream index.
pub fn derive_seed(parent: u64, stream: u64) -> u64 {
    mix64(parent ^ mix64(stream))
}

/// Derives a child seed from `parent` and a textual purpose tag.
pub fn derive_named(parent: u64, tag: &str) -> u64 {
    // FNV-1a keeps this independent of std's randomized hasher.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in tag.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    derive_seed(parent, h)
}

pub fn stream(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
