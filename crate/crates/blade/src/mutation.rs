//! Mutation-rate schedules, standard bitwise mutation, and blanket-masked
//! mutation.
//!
//! A blanket is a mask over the genotype: masked (1) positions are preserved
//! and the remaining positions mutate at the compensated rate
//! `min(1, mu * N / (N - L))`, where L is the number of preserved positions.

use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::genome::BitString;
use crate::rng::RandomSource;

pub const LEADING_ONES_OPT_NUMERATOR: f64 = 1.5936;

/// Base mutation rate policy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MutationSchedule {
    /// Fixed rate in (0, 1].
    StaticRate(f64),
    /// 1.5936/N, the optimal static rate for LeadingOnes.
    StaticOptimalLo,
    /// 1/(1 + LO(x)), the optimal fitness-adaptive rate for LeadingOnes.
    AdaptiveLo,
}

impl MutationSchedule {
    /// Base rate for a string of length `n` with the given parent fitness.
    pub fn base_rate(&self, n: usize, parent_fitness: u32) -> f64 {
        debug_assert!(n >= 2);
        match self {
            MutationSchedule::StaticRate(rate) => {
                debug_assert!(*rate > 0.0 && *rate <= 1.0);
                *rate
            }
            MutationSchedule::StaticOptimalLo => LEADING_ONES_OPT_NUMERATOR / n as f64,
            MutationSchedule::AdaptiveLo => (1.0 / (1.0 + parent_fitness as f64)).min(1.0),
        }
    }
}

impl fmt::Display for MutationSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MutationSchedule::StaticRate(rate) => write!(f, "static:{rate}"),
            MutationSchedule::StaticOptimalLo => f.write_str("lo-static-opt"),
            MutationSchedule::AdaptiveLo => f.write_str("lo-adaptive"),
        }
    }
}

/// Preservation mask over a genotype: mask bit 1 = position preserved.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Blanket {
    mask: u64,
    preserved_count: u32,
    len: u8,
}

impl Blanket {
    /// Build from a raw mask; 1 <= popcount <= len-1 (all-zeros and
    /// all-ones masks are excluded).
    pub fn new(mask: u64, len: usize) -> Result<Self> {
        let mask = mask & BitString::new(u64::MAX, len).word();
        let count = mask.count_ones();
        if count == 0 || count as usize == len {
            return Err(Error::Config(format!(
                "blanket must preserve between 1 and {} bits, got {count}",
                len - 1
            )));
        }
        Ok(Self {
            mask,
            preserved_count: count,
            len: len as u8,
        })
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    pub fn preserved_count(&self) -> u32 {
        self.preserved_count
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Compensated rate for the unmasked positions: `min(1, mu * n/(n - L))`.
pub fn blanket_rate(mu: f64, n: usize, preserved_count: u32) -> f64 {
    assert!(
        preserved_count >= 1 && (preserved_count as usize) < n,
        "preserved_count {preserved_count} out of range for n={n}"
    );
    (mu * n as f64 / (n - preserved_count as usize) as f64).min(1.0)
}

/// Flip each bit independently with probability `mu`.
pub fn standard_mutate(x: BitString, mu: f64, rng: &mut RandomSource) -> BitString {
    let mut flips = 0u64;
    for i in 0..x.len() {
        if rng.gen::<f64>() < mu {
            flips |= 1 << i;
        }
    }
    x.flip(flips)
}

/// Sample a blanket: length uniform on {1, .., n-1}, positions uniform
/// without replacement.
pub fn sample_blanket(n: usize, rng: &mut RandomSource) -> Result<Blanket> {
    if n < 2 {
        return Err(Error::Config(format!(
            "no valid blanket exists for n={n}; need n >= 2"
        )));
    }
    let preserved = rng.gen_range(1..n);
    // partial Fisher-Yates over positions 0..n
    let mut positions: Vec<usize> = (0..n).collect();
    let mut mask = 0u64;
    for k in 0..preserved {
        let j = rng.gen_range(k..n);
        positions.swap(k, j);
        mask |= 1 << positions[k];
    }
    Blanket::new(mask, n)
}

/// Mutate under a blanket: preserved positions are copied from the parent,
/// the rest flip independently at the compensated rate.
pub fn blanket_mutate(
    x: BitString,
    blanket: &Blanket,
    mu: f64,
    rng: &mut RandomSource,
) -> BitString {
    assert_eq!(
        blanket.len(),
        x.len(),
        "blanket length does not match genotype length"
    );
    let rate = blanket_rate(mu, x.len(), blanket.preserved_count());
    let mut flips = 0u64;
    for i in 0..x.len() {
        if blanket.mask() >> i & 1 == 0 && rng.gen::<f64>() < rate {
            flips |= 1 << i;
        }
    }
    x.flip(flips)
}
