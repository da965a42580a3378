//! Seed derivation and the deterministic generator used everywhere
//! randomness is needed.
//!
//! All randomized operations take a caller-supplied 64-bit seed and derive
//! per-task sub-seeds with a SplitMix64 mix, so results are reproducible
//! bit-for-bit regardless of how work is scheduled across threads.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The RNG used by sampling, bootstrap and synthetic generation.
pub type SeededRng = ChaCha8Rng;

/// SplitMix64 finalizer; full-period mix of a 64-bit state.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive an independent sub-seed for a numbered stream.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(seed ^ splitmix64(stream.wrapping_add(0xa076_1d64_78bd_642f)))
}

/// Stable 64-bit hash of a byte string (FNV-1a), for seeding by name.
pub fn hash_str(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Construct the deterministic generator for a seed.
pub fn rng_from_seed(seed: u64) -> SeededRng {
    SeededRng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn same_seed_same_stream() {
        let mut a = rng_from_seed(7);
        let mut b = rng_from_seed(7);
        for _ in 0..64 {
            assert_eq!(a.random::<u64>(), b.random::<u64>());
        }
    }

    #[test]
    fn derived_seeds_differ_across_streams() {
        let s: Vec<u64> = (0..100).map(|i| derive_seed(42, i)).collect();
        let mut dedup = s.clone();
        dedup.sort_unstable();
        dedup.dedup();
        assert_eq!(dedup.len(), s.len());
    }

    #[test]
    fn hash_is_stable() {
        // Frozen value: the FNV-1a hash of "trace-1" must never change,
        // report seeds depend on it.
        assert_eq!(hash_str("trace-1"), 0xd694_9429_a97c_cbb8);
    }
}
