//! Random streams and seed derivation.
//!
//! Every stream is a ChaCha8 generator keyed through `SeedableRng::seed_from_u64`,
//! which is specified by `rand_core` and therefore produces the same sequence
//! on every platform. Uniform reals are drawn with `Rng::random::<f64>()`,
//! which consumes one 64-bit word and keeps the top 53 bits.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The random stream type used throughout the crate.
pub type Stream = ChaCha8Rng;

/// Creates a fresh stream from a 64-bit seed.
pub fn stream(seed: u64) -> Stream {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives the seed of child `index` from `parent`.
///
/// This is the SplitMix64 output function applied to
/// `parent + (index + 1) * 0x9E3779B97F4A7C15` (wrapping). Children of one
/// parent are independent of how many siblings exist, so adding instances to
/// an experiment never perturbs the earlier ones.
pub fn derive_seed(parent: u64, index: u64) -> u64 {
    let mut z = parent.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
