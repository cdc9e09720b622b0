//! Inclusion vectors `δ ∈ {0,1}^d`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// A spike-and-slab inclusion pattern. Serialized as a `0`/`1` bitstring
/// with coordinate 0 first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct InclusionMask(Vec<bool>);

impl InclusionMask {
    pub fn zeros(d: usize) -> Self {
        Self(vec![false; d])
    }

    pub fn ones(d: usize) -> Self {
        Self(vec![true; d])
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    /// Pattern number `code` of `d` coordinates; bit `j` of `code` is `δ_j`.
    pub fn from_code(d: usize, code: u64) -> Self {
        Self((0..d).map(|j| (code >> j) & 1 == 1).collect())
    }

    pub fn code(&self) -> u64 {
        debug_assert!(self.0.len() <= 64);
        self.0
            .iter()
            .enumerate()
            .fold(0, |acc, (j, &b)| acc | ((b as u64) << j))
    }

    /// All `2^d` patterns in [`code`](Self::code) order.
    pub fn enumerate(d: usize) -> impl Iterator<Item = InclusionMask> {
        assert!(d < 32, "enumerating 2^{d} patterns");
        (0..1u64 << d).map(move |c| Self::from_code(d, c))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `‖δ‖₀`.
    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn get(&self, j: usize) -> bool {
        self.0[j]
    }

    pub fn set(&mut self, j: usize, on: bool) {
        self.0[j] = on;
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn active(&self) -> Vec<usize> {
        (0..self.0.len()).filter(|&j| self.0[j]).collect()
    }

    pub fn inactive(&self) -> Vec<usize> {
        (0..self.0.len()).filter(|&j| !self.0[j]).collect()
    }

    /// `δ·θ`: zero out the inactive coordinates.
    pub fn restrict(&self, theta: &[f64]) -> Vec<f64> {
        theta
            .iter()
            .zip(&self.0)
            .map(|(&t, &b)| if b { t } else { 0.0 })
            .collect()
    }

    pub fn bitstring(&self) -> String {
        self.0.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }
}

impl fmt::Display for InclusionMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.bitstring())
    }
}

impl FromStr for InclusionMask {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::InvalidArgument(format!("bad inclusion bit {other:?}"))),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Self)
    }
}

impl Serialize for InclusionMask {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.bitstring())
    }
}

impl<'de> Deserialize<'de> for InclusionMask {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
