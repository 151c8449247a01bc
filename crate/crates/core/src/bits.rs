//! Fixed-length binary vectors.
//!
//! Bits are packed most-significant-first into `u64` words, so the derived
//! ordering on two vectors of equal dimension is the lexicographic order of
//! their bit strings.

use std::fmt;
use std::str::FromStr;

use crate::error::{domain, Error, Result};

const WORD: usize = 64;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitVector {
    dim: usize,
    words: Vec<u64>,
}

impl BitVector {
    /// All-zero vector of the given dimension.
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            words: vec![0; dim.div_ceil(WORD)],
        }
    }

    /// Builds a vector from 0/1 values. Any other value is a domain error.
    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            match b {
                0 => {}
                1 => v.set(i, true),
                other => return domain(format!("bit {i} has value {other}, expected 0 or 1")),
            }
        }
        Ok(v)
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            v.set(i, b);
        }
        v
    }

    /// Big-endian binary representation of `value` using `dim` bits.
    pub fn from_index(value: u64, dim: usize) -> Self {
        let mut v = Self::zeros(dim);
        for i in 0..dim {
            let shift = dim - 1 - i;
            if shift < 64 && (value >> shift) & 1 == 1 {
                v.set(i, true);
            }
        }
        v
    }

    /// Inverse of [`BitVector::from_index`] for dimensions up to 64.
    pub fn to_index(&self) -> u64 {
        self.iter().fold(0u64, |acc, b| (acc << 1) | b as u64)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(
            i < self.dim,
            "bit index {i} out of range for dim {}",
            self.dim
        );
        (self.words[i / WORD] >> (WORD - 1 - i % WORD)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(
            i < self.dim,
            "bit index {i} out of range for dim {}",
            self.dim
        );
        let mask = 1u64 << (WORD - 1 - i % WORD);
        if value {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.dim).map(move |i| self.get(i))
    }

    pub fn to_bits(&self) -> Vec<u8> {
        self.iter().map(u8::from).collect()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.iter().map(|b| if b { 1.0 } else { 0.0 }).collect()
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Number of differing positions; equals the squared Euclidean distance
    /// between the two vectors viewed as points of the unit hypercube.
    pub fn hamming(&self, other: &Self) -> Result<usize> {
        if self.dim != other.dim {
            return domain(format!("dimension mismatch: {} vs {}", self.dim, other.dim));
        }
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum())
    }

    /// Concatenation `self ++ other`.
    pub fn concat(&self, other: &Self) -> Self {
        let mut out = Self::zeros(self.dim + other.dim);
        for (i, b) in self.iter().chain(other.iter()).enumerate() {
            out.set(i, b);
        }
        out
    }

    pub(crate) fn ensure_dim(&self, expected: usize, what: &str) -> Result<()> {
        if self.dim != expected {
            return domain(format!(
                "{what}: expected dimension {expected}, got {}",
                self.dim
            ));
        }
        Ok(())
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVector({self})")
    }
}

impl FromStr for BitVector {
    type Err = Error;

    /// Parses a string of `0`/`1` characters. The empty string is the
    /// zero-dimensional vector.
    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(0u8),
                '1' => Ok(1u8),
                other => domain(format!("invalid bit character {other:?}")),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_bits(&bits)
    }
}
