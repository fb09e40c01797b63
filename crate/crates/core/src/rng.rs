//! Seeded randomness.
//!
//! All random draws go through [`ChaCha8Rng`], whose output stream is fixed
//! by its seed on every platform. Independent streams (one per k-means
//! restart, one per benchmark cell) get their own seed from [`derive_seed`].

use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng;

/// Environment variable consulted for the default seed.
pub const SEED_ENV: &str = "SPARSEVQ_SEED";

pub const DEFAULT_SEED: u64 = 0;

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of sub-stream `stream` of `base`.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    mix(base ^ mix(stream.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15)))
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Seed from [`SEED_ENV`], falling back to [`DEFAULT_SEED`].
pub fn default_seed() -> u64 {
    std::env::var(SEED_ENV)
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_SEED)
}
