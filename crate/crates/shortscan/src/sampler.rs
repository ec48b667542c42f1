//! Sampling without replacement from huge token spaces, and turning scan
//! outcomes into density estimates and extrapolations.
//!
//! A [`SamplePlan`] walks a keyed permutation of the space, so it emits
//! exactly `sample_size` distinct uniform tokens with memory independent of
//! both sample and space size — no seen-set, no deduplication pass.
//! Estimates carry Wilson 95% score intervals, which keep their coverage at
//! the extreme densities where the Wald interval collapses.

use crate::permute::{IndexPermutation, PermutationError};
use crate::space::TokenSpace;
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

/// 97.5th percentile of the standard normal: the z for a 95% interval.
const Z_95: f64 = 1.959963984540054;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SampleError {
    #[error("sample_size {requested} exceeds the space cardinality {cardinality}")]
    SampleTooLarge {
        requested: u64,
        cardinality: BigUint,
    },
    #[error("space cardinality {0} exceeds the 2^126 sampling limit")]
    SpaceTooLarge(BigUint),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EstimateError {
    #[error("cannot estimate from zero samples")]
    NoSamples,
    #[error("hits {hits} exceed sampled count {sampled}")]
    MoreHitsThanSamples { hits: u64, sampled: u64 },
}

/// A reproducible plan for drawing `sample_size` distinct tokens uniformly
/// from `space`. The same seed always yields the identical token sequence.
#[derive(Debug, Clone)]
pub struct SamplePlan {
    space: TokenSpace,
    sample_size: u64,
    seed: u64,
    permutation: IndexPermutation,
}

impl SamplePlan {
    pub fn new(space: TokenSpace, sample_size: u64, seed: u64) -> Result<Self, SampleError> {
        let cardinality = space.cardinality();
        let Some(cardinality_u128) = space.cardinality_u128().filter(|c| *c <= 1 << 126) else {
            return Err(SampleError::SpaceTooLarge(cardinality));
        };
        if BigUint::from(sample_size) > cardinality {
            return Err(SampleError::SampleTooLarge {
                requested: sample_size,
                cardinality,
            });
        }
        let permutation = IndexPermutation::new(cardinality_u128.max(1), seed).map_err(|e| {
            debug_assert!(matches!(e, PermutationError::EmptyDomain), "size checked");
            SampleError::SpaceTooLarge(cardinality)
        })?;
        Ok(Self {
            space,
            sample_size,
            seed,
            permutation,
        })
    }

    pub fn space(&self) -> &TokenSpace {
        &self.space
    }

    pub fn sample_size(&self) -> u64 {
        self.sample_size
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Space index of sample element `i`.
    pub fn index_at(&self, i: u64) -> u128 {
        debug_assert!(i < self.sample_size);
        self.permutation.apply(i as u128)
    }

    /// Token of sample element `i`.
    pub fn token_at(&self, i: u64) -> String {
        self.space
            .encode_u128(self.index_at(i))
            .expect("permutation image is in range")
    }

    /// The full sample stream.
    pub fn tokens(&self) -> impl Iterator<Item = String> + '_ {
        (0..self.sample_size).map(|i| self.token_at(i))
    }

    /// Tokens for a contiguous slice of the sample, for workers consuming
    /// disjoint ranges of the same permutation concurrently.
    pub fn tokens_in_range(
        &self,
        range: std::ops::Range<u64>,
    ) -> impl Iterator<Item = String> + '_ {
        debug_assert!(range.end <= self.sample_size);
        range.map(|i| self.token_at(i))
    }
}

/// A proportion estimate with its Wilson 95% score interval and the
/// extrapolation to the whole space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub sampled: u64,
    pub hits: u64,
    pub point: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    #[serde(with = "crate::numeric::biguint_string")]
    pub space_cardinality: BigUint,
    /// `round(hits * cardinality / sampled)`, computed exactly.
    #[serde(with = "crate::numeric::biguint_string")]
    pub extrapolated_total: BigUint,
}

impl DensityEstimate {
    pub fn covers(&self, density: f64) -> bool {
        self.ci_low <= density && density <= self.ci_high
    }
}

/// Point estimate and Wilson 95% interval for `hits` out of `sampled`
/// probes of a space with `cardinality` tokens.
pub fn estimate_density(
    sampled: u64,
    hits: u64,
    cardinality: &BigUint,
) -> Result<DensityEstimate, EstimateError> {
    if sampled == 0 {
        return Err(EstimateError::NoSamples);
    }
    if hits > sampled {
        return Err(EstimateError::MoreHitsThanSamples { hits, sampled });
    }
    let n = sampled as f64;
    let p = hits as f64 / n;
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z_95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let extrapolated_total = if cardinality.is_zero() {
        BigUint::zero()
    } else {
        // round(hits * cardinality / sampled) in exact arithmetic
        let numer = BigUint::from(hits) * cardinality * 2u8 + BigUint::from(sampled);
        numer / (BigUint::from(sampled) * 2u8)
    };
    Ok(DensityEstimate {
        sampled,
        hits,
        point: p,
        ci_low: (center - half).max(0.0),
        ci_high: (center + half).min(1.0),
        space_cardinality: cardinality.clone(),
        extrapolated_total,
    })
}

/// Project a category observed at `fraction` of the sample space onto the
/// whole space: `round(fraction * cardinality)`, exact.
pub fn extrapolate_count(cardinality: &BigUint, fraction: f64) -> BigUint {
    assert!(
        (0.0..=1.0).contains(&fraction),
        "fraction must be in [0, 1]"
    );
    let ratio = BigRational::from_float(fraction).unwrap_or_else(BigRational::zero);
    let scaled = ratio * BigRational::from_integer(cardinality.clone().into());
    crate::numeric::round_ratio(&scaled.max(BigRational::zero()))
}

/// Counts of scan hits per category label. Counts always sum to the number
/// of classified hits.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CategoryBreakdown {
    counts: BTreeMap<String, u64>,
}

impl CategoryBreakdown {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn increment(&mut self, label: &str) {
        *self.counts.entry(label.to_string()).or_insert(0) += 1;
    }

    pub fn count(&self, label: &str) -> u64 {
        self.counts.get(label).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> &BTreeMap<String, u64> {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn merge(&mut self, other: &CategoryBreakdown) {
        for (label, count) in &other.counts {
            *self.counts.entry(label.clone()).or_insert(0) += count;
        }
    }

    /// Fraction of `sampled` probes that landed in `label`.
    pub fn fraction_of(&self, label: &str, sampled: u64) -> f64 {
        if sampled == 0 {
            0.0
        } else {
            self.count(label) as f64 / sampled as f64
        }
    }
}
