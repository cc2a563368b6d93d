//! Deterministic seed fan-out.
//!
//! Every stage, bin, path, or worker derives its own seed from a master seed
//! and an integer (or string) tag through SplitMix64. Adding a new consumer
//! with a fresh tag never perturbs the streams of existing consumers, which
//! is what keeps multi-stage experiments reproducible as they grow.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer. Bijective on u64, good avalanche.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from a master seed and an integer tag.
pub fn derive_seed(master: u64, tag: u64) -> u64 {
    splitmix64(master ^ tag.wrapping_mul(GOLDEN_GAMMA))
}

/// Derive a child seed from a master seed and a string tag (FNV-1a over the
/// bytes, then the integer derivation).
pub fn derive_seed_str(master: u64, tag: &str) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for b in tag.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    derive_seed(master, h)
}

/// Seeded RNG for a (master, tag) pair.
pub fn rng_from(master: u64, tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, tag))
}
