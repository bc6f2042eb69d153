//! Project-wide seeded randomness.
//!
//! Every random choice in the crate (random-walk steps, genotype draws,
//! reference sampling, column sampling, injection positions, encoding
//! tables) is drawn from ChaCha8 seeded through [`seeded`]. Sub-seeds are
//! derived with the SplitMix64 finaliser so that results depend only on
//! `(master seed, indices)` and never on scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic sub-seed for `(master, a, b)`.
pub fn derive_seed(master: u64, a: u64, b: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ a) ^ b.rotate_left(32))
}

/// The first `k` entries of a seeded Fisher–Yates shuffle of `0..n`.
///
/// The result for `k` is a prefix of the result for any larger `k` under
/// the same generator state.
pub fn sample_prefix<R: Rng>(rng: &mut R, n: usize, k: usize) -> Vec<usize> {
    assert!(k <= n);
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.random_range(i..n);
        idx.swap(i, j);
    }
    idx.truncate(k);
    idx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prefix_consistent_sampling() {
        let a = sample_prefix(&mut seeded(5), 100, 3);
        let b = sample_prefix(&mut seeded(5), 100, 10);
        assert_eq!(a[..], b[..3]);
        let mut sorted = b.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 10);
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(1, 0, 0), derive_seed(1, 0, 1));
        assert_ne!(derive_seed(1, 0, 1), derive_seed(1, 1, 0));
        assert_eq!(derive_seed(9, 3, 4), derive_seed(9, 3, 4));
    }
}
