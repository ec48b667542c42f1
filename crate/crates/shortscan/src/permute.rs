//! Keyed pseudorandom permutations of integer ranges.
//!
//! Sampling without replacement from a token space of N tokens is done by
//! walking a keyed permutation of `[0, N)`: element `i` of the sample is
//! `perm(i)`. The permutation is a 4-round balanced Feistel network over the
//! smallest power-of-4 domain covering the range, cycle-walking values that
//! land outside the range back into it. This gives the same statistics as
//! generate-and-deduplicate with O(1) memory regardless of sample size.

use thiserror::Error;

const ROUNDS: usize = 4;

/// Largest supported domain: halves must fit in 63 bits each.
const MAX_DOMAIN: u128 = 1 << 126;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PermutationError {
    #[error("permutation domain must be non-empty")]
    EmptyDomain,
    #[error("domain of {0} values exceeds the 2^126 permutation limit")]
    DomainTooLarge(u128),
}

/// SplitMix64 step; drives round-key derivation.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    mix64(*state)
}

/// SplitMix64 finalizer, used as the Feistel round function.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// A deterministic permutation of `[0, size)` keyed by a 64-bit seed.
#[derive(Debug, Clone)]
pub struct IndexPermutation {
    size: u128,
    half_bits: u32,
    keys: [u64; ROUNDS],
}

impl IndexPermutation {
    pub fn new(size: u128, seed: u64) -> Result<Self, PermutationError> {
        if size == 0 {
            return Err(PermutationError::EmptyDomain);
        }
        if size > MAX_DOMAIN {
            return Err(PermutationError::DomainTooLarge(size));
        }
        // Smallest power-of-4 domain >= size, i.e. an even bit width.
        let min_bits = if size <= 1 {
            1
        } else {
            128 - (size - 1).leading_zeros()
        };
        let half_bits = min_bits.div_ceil(2);
        let mut state = seed;
        let mut keys = [0u64; ROUNDS];
        for key in &mut keys {
            *key = splitmix64(&mut state);
        }
        Ok(Self {
            size,
            half_bits,
            keys,
        })
    }

    pub fn size(&self) -> u128 {
        self.size
    }

    /// Image of `index` under the permutation. `index` must be `< size`.
    pub fn apply(&self, index: u128) -> u128 {
        debug_assert!(index < self.size);
        let mut x = index;
        // Cycle-walk: the walk stays within index's cycle in the full
        // domain, which always contains an in-range element (at worst,
        // index itself).
        loop {
            x = self.feistel(x);
            if x < self.size {
                return x;
            }
        }
    }

    fn feistel(&self, x: u128) -> u128 {
        let mask: u64 = (1u64 << self.half_bits) - 1;
        let mut left = ((x >> self.half_bits) as u64) & mask;
        let mut right = (x as u64) & mask;
        for key in self.keys {
            let f = mix64(right ^ key) & mask;
            let new_right = left ^ f;
            left = right;
            right = new_right;
        }
        ((left as u128) << self.half_bits) | right as u128
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn assert_bijection(size: u128, seed: u64) {
        let perm = IndexPermutation::new(size, seed).unwrap();
        let mut seen = HashSet::with_capacity(size as usize);
        for i in 0..size {
            let v = perm.apply(i);
            assert!(v < size, "image {v} out of range for size {size}");
            assert!(seen.insert(v), "duplicate image {v} for size {size}");
        }
        assert_eq!(seen.len(), size as usize);
    }

    #[test]
    fn permutes_assorted_sizes() {
        for &size in &[1u128, 2, 3, 4, 5, 63, 64, 65, 100, 101, 997, 3844, 4096] {
            for seed in [0u64, 1, 42, u64::MAX] {
                assert_bijection(size, seed);
            }
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = IndexPermutation::new(3844, 7).unwrap();
        let b = IndexPermutation::new(3844, 7).unwrap();
        let c = IndexPermutation::new(3844, 8).unwrap();
        let image_a: Vec<u128> = (0..100).map(|i| a.apply(i)).collect();
        let image_b: Vec<u128> = (0..100).map(|i| b.apply(i)).collect();
        let image_c: Vec<u128> = (0..100).map(|i| c.apply(i)).collect();
        assert_eq!(image_a, image_b);
        assert_ne!(image_a, image_c);
    }

    #[test]
    fn rejects_degenerate_domains() {
        assert_eq!(
            IndexPermutation::new(0, 1).unwrap_err(),
            PermutationError::EmptyDomain
        );
        assert!(matches!(
            IndexPermutation::new(MAX_DOMAIN + 1, 1).unwrap_err(),
            PermutationError::DomainTooLarge(_)
        ));
    }

    #[test]
    fn large_domain_stays_in_range() {
        let size = (1u128 << 125) + 12345;
        let perm = IndexPermutation::new(size, 99).unwrap();
        for i in 0..1000u128 {
            assert!(perm.apply(i) < size);
        }
    }

    // Coarse spread check; the rigorous chi-squared test lives in the
    // acceptance suite.
    #[test]
    fn first_image_spreads_across_seeds() {
        let size = 100u128;
        let mut counts = [0u32; 100];
        for seed in 0..5000u64 {
            let perm = IndexPermutation::new(size, seed).unwrap();
            counts[perm.apply(0) as usize] += 1;
        }
        let max = *counts.iter().max().unwrap() as f64;
        let min = *counts.iter().min().unwrap() as f64;
        // Expectation is 50 per bucket; catastrophic skew would blow this.
        assert!(max < 110.0, "bucket overloaded: {max}");
        assert!(min > 10.0, "bucket starved: {min}");
    }
}
