//! Deterministic sub-seed derivation.
//!
//! Every run takes a single 64-bit seed; each component that needs randomness
//! derives its own stream as `derive_seed(base, tag, index)` where `tag`
//! names the consumer (e.g. `"montecarlo/trial"`) and `index` separates
//! repeated uses. Streams are fed to ChaCha8, so identical seeds reproduce
//! identical outputs across platforms.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 output function; the standard 64-bit finalizer.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// FNV-1a over the tag bytes, used to separate named consumers.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Derives the sub-seed for (`tag`, `index`) under a base seed.
pub fn derive_seed(base: u64, tag: &str, index: u64) -> u64 {
    splitmix64(splitmix64(base ^ fnv1a(tag.as_bytes())) ^ index)
}

/// The project-wide generator: ChaCha8 keyed by a 64-bit seed.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivation_is_stable_and_tag_separated() {
        let a = derive_seed(42, "montecarlo/trial", 0);
        assert_eq!(a, derive_seed(42, "montecarlo/trial", 0));
        assert_ne!(a, derive_seed(42, "montecarlo/trial", 1));
        assert_ne!(a, derive_seed(42, "certify/basis", 0));
        assert_ne!(a, derive_seed(43, "montecarlo/trial", 0));
    }

    #[test]
    fn rng_streams_reproduce() {
        use rand::Rng;
        let mut r1 = rng_from_seed(7);
        let mut r2 = rng_from_seed(7);
        for _ in 0..16 {
            assert_eq!(r1.random::<u64>(), r2.random::<u64>());
        }
    }
}
