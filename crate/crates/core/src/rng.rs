//! Deterministic RNG streams.
//!
//! Every randomized operation takes an explicit generator. Streams for
//! per-item work (circuits in a pool, labeling angles, ...) are derived from
//! a master seed and an item index so items can be (re)computed independently
//! and in any order with identical results.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The crate-wide seeded generator.
pub type SeededRng = ChaCha8Rng;

/// Build a generator from a bare seed.
pub fn rng_from_seed(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derive an independent stream for item `index` within domain `tag`.
///
/// SplitMix64-style mixing keeps adjacent (seed, index) pairs uncorrelated.
pub fn derive_stream(master_seed: u64, tag: &str, index: u64) -> SeededRng {
    let mut h = master_seed ^ 0x9E37_79B9_7F4A_7C15;
    for &b in tag.as_bytes() {
        h = mix64(h ^ u64::from(b));
    }
    ChaCha8Rng::seed_from_u64(mix64(h ^ index))
}

fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
