//! Genotypes and the benchmark fitness functions.
//!
//! A genotype is a fixed-length binary string packed into a single machine
//! word (N <= 64). Bit 1 is the lowest-order position of the word and is
//! printed leftmost; the LeadingOnes prefix is counted from bit 1.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::RandomSource;

pub const MAX_LEN: usize = 64;

/// Fixed-length binary genotype in canonical form: bits beyond position N
/// are always zero.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString {
    bits: u64,
    len: u8,
}

impl BitString {
    /// Construct from a raw word, masking off anything beyond `len`.
    pub fn new(bits: u64, len: usize) -> Self {
        assert!((1..=MAX_LEN).contains(&len), "length must be in 1..=64");
        Self {
            bits: bits & Self::mask(len),
            len: len as u8,
        }
    }

    pub fn zeros(len: usize) -> Self {
        Self::new(0, len)
    }

    pub fn ones(len: usize) -> Self {
        Self::new(u64::MAX, len)
    }

    fn mask(len: usize) -> u64 {
        if len == MAX_LEN {
            u64::MAX
        } else {
            (1u64 << len) - 1
        }
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        false // length is at least 1 by construction
    }

    pub fn word(&self) -> u64 {
        self.bits
    }

    /// Bit at 1-based position `i` (1 = lowest order).
    pub fn get(&self, i: usize) -> bool {
        debug_assert!((1..=self.len()).contains(&i));
        self.bits >> (i - 1) & 1 == 1
    }

    pub fn count_ones(&self) -> u32 {
        self.bits.count_ones()
    }

    /// Length of the maximal all-ones prefix starting at bit 1.
    pub fn leading_ones(&self) -> u32 {
        let inverted = !self.bits & Self::mask(self.len());
        if inverted == 0 {
            self.len as u32
        } else {
            inverted.trailing_zeros()
        }
    }

    /// XOR with a flip mask, staying canonical.
    pub fn flip(&self, flips: u64) -> Self {
        Self::new(self.bits ^ flips, self.len())
    }

    /// Canonical word little-end first: exactly ceil(n/4) hex digits,
    /// first digit = lowest nibble.
    pub fn to_hex(&self) -> String {
        let digits = self.len().div_ceil(4);
        (0..digits)
            .map(|j| char::from_digit((self.bits >> (4 * j) & 0xf) as u32, 16).unwrap())
            .collect()
    }

    /// Parse the hex form produced by [`to_hex`](Self::to_hex).
    pub fn from_hex(hex: &str, len: usize) -> Result<Self> {
        if !(1..=MAX_LEN).contains(&len) {
            return Err(Error::Config(format!("length {len} out of range 1..=64")));
        }
        let digits = len.div_ceil(4);
        if hex.len() != digits {
            return Err(Error::Protocol(format!(
                "expected {digits} hex digits for n={len}, got {}",
                hex.len()
            )));
        }
        let mut bits = 0u64;
        for (j, c) in hex.chars().enumerate() {
            let d = c
                .to_digit(16)
                .ok_or_else(|| Error::Protocol(format!("invalid hex digit '{c}'")))?;
            bits |= (d as u64) << (4 * j);
        }
        if bits & !Self::mask(len) != 0 {
            return Err(Error::Protocol("bits set beyond string length".into()));
        }
        Ok(Self::new(bits, len))
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 1..=self.len() {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({self})")
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if !(1..=MAX_LEN).contains(&s.len()) {
            return Err(Error::Config(format!(
                "bitstring literal length {} out of range 1..=64",
                s.len()
            )));
        }
        let mut bits = 0u64;
        for (i, c) in s.chars().enumerate() {
            match c {
                '1' => bits |= 1 << i,
                '0' => {}
                _ => return Err(Error::Config(format!("invalid bit character '{c}'"))),
            }
        }
        Ok(Self::new(bits, s.len()))
    }
}

/// The three benchmark problems.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Problem {
    /// Needle in a haystack: fitness 1 at the all-ones string, 0 elsewhere.
    AllOnes,
    /// Fitness = number of one-bits.
    OneMax,
    /// Fitness = length of the maximal all-ones prefix.
    LeadingOnes,
}

impl Problem {
    pub fn evaluate(&self, x: BitString) -> u32 {
        match self {
            Problem::AllOnes => (x.count_ones() as usize == x.len()) as u32,
            Problem::OneMax => x.count_ones(),
            Problem::LeadingOnes => x.leading_ones(),
        }
    }

    pub fn optimum_fitness(&self, n: usize) -> u32 {
        match self {
            Problem::AllOnes => 1,
            Problem::OneMax | Problem::LeadingOnes => n as u32,
        }
    }

    pub fn is_optimal(&self, x: BitString) -> bool {
        self.evaluate(x) == self.optimum_fitness(x.len())
    }

    pub fn name(&self) -> &'static str {
        match self {
            Problem::AllOnes => "allones",
            Problem::OneMax => "onemax",
            Problem::LeadingOnes => "leadingones",
        }
    }
}

impl FromStr for Problem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "allones" => Ok(Problem::AllOnes),
            "onemax" => Ok(Problem::OneMax),
            "leadingones" => Ok(Problem::LeadingOnes),
            other => Err(Error::Config(format!("unknown problem '{other}'"))),
        }
    }
}

/// Sample a uniform random genotype: each bit 1 with probability 0.5.
pub fn random_bitstring(n: usize, rng: &mut RandomSource) -> Result<BitString> {
    if !(1..=MAX_LEN).contains(&n) {
        return Err(Error::Config(format!("string length {n} out of range 1..=64")));
    }
    Ok(BitString::new(rng.gen::<u64>(), n))
}
