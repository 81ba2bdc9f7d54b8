//! Binary patterns and pattern sets.
//!
//! A pattern is written the way kets are printed: the leftmost character is
//! the highest qubit. The basis index of `b_{m-1} ... b_1 b_0` is `sum b_i 2^i`,
//! so `"0110"` is index 6 and `"1001"` is index 9.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{QamError, Result};

/// Largest supported pattern dimension.
pub const MAX_DIM: usize = 32;

/// An `m`-bit classical pattern stored as its little-endian basis index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BinaryPattern {
    index: usize,
    dim: usize,
}

impl BinaryPattern {
    pub fn new(index: usize, dim: usize) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(QamError::Input(format!(
                "pattern dimension {dim} outside 1..={MAX_DIM}"
            )));
        }
        if dim < usize::BITS as usize && index >> dim != 0 {
            return Err(QamError::Input(format!(
                "index {index} does not fit in {dim} bits"
            )));
        }
        Ok(Self { index, dim })
    }

    /// Basis index of the pattern (bit `i` is qubit `q_i`).
    #[inline]
    pub fn index(&self) -> usize {
        self.index
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn bit(&self, qubit: usize) -> bool {
        (self.index >> qubit) & 1 == 1
    }

    #[inline]
    pub fn count_ones(&self) -> u32 {
        self.index.count_ones()
    }

    /// Number of positions in which the two patterns differ.
    pub fn distance(&self, other: &BinaryPattern) -> Result<u32> {
        if self.dim != other.dim {
            return Err(QamError::Input(format!(
                "dimension mismatch: {} vs {}",
                self.dim, other.dim
            )));
        }
        Ok((self.index ^ other.index).count_ones())
    }
}

impl fmt::Display for BinaryPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in (0..self.dim).rev() {
            f.write_str(if self.bit(q) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BinaryPattern {
    type Err = QamError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Err(QamError::Input("empty bit string".into()));
        }
        let mut index = 0usize;
        for c in s.chars() {
            index <<= 1;
            match c {
                '0' => {}
                '1' => index |= 1,
                other => {
                    return Err(QamError::Input(format!(
                        "invalid character {other:?} in bit string {s:?}"
                    )))
                }
            }
        }
        BinaryPattern::new(index, s.len())
    }
}

/// `k` distinct patterns of a common dimension `m`, in input order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternSet {
    dim: usize,
    patterns: Vec<BinaryPattern>,
}

impl PatternSet {
    pub fn new(patterns: Vec<BinaryPattern>) -> Result<Self> {
        let first = patterns
            .first()
            .ok_or_else(|| QamError::Input("pattern set is empty".into()))?;
        let dim = first.dim();
        let mut seen = HashSet::with_capacity(patterns.len());
        for p in &patterns {
            if p.dim() != dim {
                return Err(QamError::Input(format!(
                    "pattern {p} has dimension {}, expected {dim}",
                    p.dim()
                )));
            }
            if !seen.insert(p.index()) {
                return Err(QamError::Input(format!("duplicate pattern {p}")));
            }
        }
        Ok(Self { dim, patterns })
    }

    /// Parses bit strings such as `["0011", "1001"]`.
    pub fn parse<S: AsRef<str>>(items: &[S]) -> Result<Self> {
        let patterns = items
            .iter()
            .map(|s| s.as_ref().parse())
            .collect::<Result<Vec<BinaryPattern>>>()?;
        Self::new(patterns)
    }

    /// Builds a set from basis indices.
    pub fn from_indices(indices: &[usize], dim: usize) -> Result<Self> {
        let patterns = indices
            .iter()
            .map(|&i| BinaryPattern::new(i, dim))
            .collect::<Result<Vec<_>>>()?;
        Self::new(patterns)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn patterns(&self) -> &[BinaryPattern] {
        &self.patterns
    }

    pub fn iter(&self) -> impl Iterator<Item = &BinaryPattern> {
        self.patterns.iter()
    }

    pub fn indices(&self) -> Vec<usize> {
        self.patterns.iter().map(BinaryPattern::index).collect()
    }

    pub fn contains_index(&self, index: usize) -> bool {
        self.patterns.iter().any(|p| p.index() == index)
    }
}

/// Hamming distance between two patterns of equal dimension.
pub fn hamming(a: &BinaryPattern, b: &BinaryPattern) -> Result<u32> {
    a.distance(b)
}
