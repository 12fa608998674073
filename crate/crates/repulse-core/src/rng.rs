//! Deterministic RNG derivation.
//!
//! Every random decision in the toolkit flows from a single master seed
//! through [`derive_seed`], a SplitMix64-style mixer. Sub-seeds are derived
//! per scene, per stage, and (for data-parallel loops) per item, so results
//! are independent of scheduling and thread count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Named RNG streams, so different stages of one scene never share a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Env,
    Placement,
    Growth,
    Sampling,
    Augment,
    Plan,
    Jitter,
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::Env => 0x01,
            Stream::Placement => 0x02,
            Stream::Growth => 0x03,
            Stream::Sampling => 0x04,
            Stream::Augment => 0x05,
            Stream::Plan => 0x06,
            Stream::Jitter => 0x07,
        }
    }
}

/// SplitMix64 finalizer. Good avalanche, cheap, stable across platforms.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a sub-seed from `(seed, stream, index)`.
pub fn derive_seed(seed: u64, stream: Stream, index: u64) -> u64 {
    mix64(mix64(seed ^ stream.tag().wrapping_mul(0xA076_1D64_78BD_642F)) ^ index)
}

/// Deterministic RNG for a derived seed.
pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Per-stage RNG: `rng_for(master, Stream::Growth, scene_id)`.
pub fn rng_for(seed: u64, stream: Stream, index: u64) -> ChaCha8Rng {
    rng_from(derive_seed(seed, stream, index))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn derived_seeds_are_reproducible() {
        let a = derive_seed(42, Stream::Growth, 7);
        let b = derive_seed(42, Stream::Growth, 7);
        assert_eq!(a, b);
    }

    #[test]
    fn streams_and_indices_decorrelate() {
        let base = derive_seed(42, Stream::Growth, 0);
        assert_ne!(base, derive_seed(42, Stream::Sampling, 0));
        assert_ne!(base, derive_seed(42, Stream::Growth, 1));
        assert_ne!(base, derive_seed(43, Stream::Growth, 0));
    }

    #[test]
    fn rng_stream_is_deterministic() {
        let mut r1 = rng_for(9, Stream::Sampling, 3);
        let mut r2 = rng_for(9, Stream::Sampling, 3);
        let v1: Vec<u64> = (0..8).map(|_| r1.gen()).collect();
        let v2: Vec<u64> = (0..8).map(|_| r2.gen()).collect();
        assert_eq!(v1, v2);
    }
}
