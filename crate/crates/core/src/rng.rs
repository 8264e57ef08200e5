//! Deterministic seed derivation.
//!
//! All randomness in the crate flows from a single 64-bit master seed.
//! Independent streams (replications, simulation draws, subsampling) derive
//! their own seed with [`derive_seed`], so results are identical regardless
//! of execution order or thread count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// SplitMix64 finalizer; decorrelates nearby inputs.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive an independent stream seed from a master seed and a stream label.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    splitmix64(master ^ splitmix64(stream))
}

/// Deterministic generator for the given seed.
pub fn rng_from_seed(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

/// Generator for stream `stream` of master seed `master`.
pub fn stream_rng(master: u64, stream: u64) -> ChaCha12Rng {
    rng_from_seed(derive_seed(master, stream))
}
