//! Stable seed derivation.
//!
//! Every random stream in the harness (trial generation, fold shuffles,
//! bootstrap draws) is seeded from a parent seed and a small tag path, so
//! results do not depend on execution order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from `parent` and `tag`.
pub fn derive(parent: u64, tag: u64) -> u64 {
    mix(parent.wrapping_add(GOLDEN) ^ mix(tag.wrapping_mul(GOLDEN).wrapping_add(1)))
}

/// Derive along a path of tags.
pub fn derive_path(parent: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(parent, |s, &t| derive(s, t))
}

/// Tag for a string label (scheme or model name), FNV-1a.
pub fn tag(label: &str) -> u64 {
    label
        .bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
            (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3)
        })
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
