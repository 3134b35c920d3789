//! Multi-index arithmetic and the block-partition combinatorics behind
//! higher-order inner derivatives.
//!
//! A [`MultiIndex`] is an element of ℕ₀^d written multiplicatively: the
//! product of two indices adds their exponents and the empty index is the
//! identity. [`block_partitions`] enumerates, with multiplicities, the ways
//! of splitting the derivative positions of an index into unordered
//! nonempty blocks plus a remainder; this is the Faà-di-Bruno-style sum
//! that iterating the one-step relation
//! `(u_{A,l})_a = u_{Aa,l} + t_a u_{A,l+1}` produces.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MultiIndexError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("axis {axis} out of range 1..={len}")]
    AxisOutOfRange { axis: usize, len: usize },
    #[error("invalid multi-index text {text:?}: {reason}")]
    Parse { text: String, reason: String },
}

/// Exponent vector in ℕ₀^d. Length is fixed per chart; operations on
/// indices of different lengths are rejected, never padded.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex(Vec<u32>);

// Multi-indices serialize in their textual form, dot-separated exponents.
impl Serialize for MultiIndex {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for MultiIndex {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        MultiIndex(exponents)
    }

    /// The zero index of length `len`.
    pub fn zero(len: usize) -> Self {
        MultiIndex(vec![0; len])
    }

    /// Unit index with a single 1 at `axis` (1-based).
    pub fn unit(len: usize, axis: usize) -> Result<Self, MultiIndexError> {
        Self::zero(len).bump(axis)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    /// Sum of the exponents, the modulus |A|.
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Component-wise sum, the monoid product A·B.
    pub fn mul(&self, other: &MultiIndex) -> Result<MultiIndex, MultiIndexError> {
        if self.len() != other.len() {
            return Err(MultiIndexError::LengthMismatch(self.len(), other.len()));
        }
        Ok(MultiIndex(
            self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect(),
        ))
    }

    /// The index `Aa`: entry `axis` (1-based) increased by one.
    pub fn bump(&self, axis: usize) -> Result<MultiIndex, MultiIndexError> {
        if axis == 0 || axis > self.len() {
            return Err(MultiIndexError::AxisOutOfRange {
                axis,
                len: self.len(),
            });
        }
        let mut e = self.0.clone();
        e[axis - 1] += 1;
        Ok(MultiIndex(e))
    }

    /// Entry `axis` (1-based) decreased by one; `None` if it is zero.
    pub fn unbump(&self, axis: usize) -> Option<MultiIndex> {
        if axis == 0 || axis > self.len() || self.0[axis - 1] == 0 {
            return None;
        }
        let mut e = self.0.clone();
        e[axis - 1] -= 1;
        Some(MultiIndex(e))
    }

    /// Lowest 1-based axis with a nonzero entry.
    pub fn lowest_axis(&self) -> Option<usize> {
        self.0.iter().position(|&e| e > 0).map(|i| i + 1)
    }

    /// The derivative positions of the index as a list of 1-based axes,
    /// e.g. (2,1) -> 1,1,2.
    pub fn positions(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.order() as usize);
        for (i, &e) in self.0.iter().enumerate() {
            for _ in 0..e {
                out.push(i + 1);
            }
        }
        out
    }

    fn from_positions(len: usize, positions: &[usize]) -> MultiIndex {
        let mut e = vec![0u32; len];
        for &p in positions {
            e[p - 1] += 1;
        }
        MultiIndex(e)
    }
}

impl fmt::Display for MultiIndex {
    /// Dot-separated exponents, `2.0.1`; the zero index of length 3 is
    /// `0.0.0` and the length-0 index is the empty string.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|e| e.to_string()).collect();
        write!(f, "{}", parts.join("."))
    }
}

impl FromStr for MultiIndex {
    type Err = MultiIndexError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.is_empty() {
            return Ok(MultiIndex(Vec::new()));
        }
        let mut exps = Vec::new();
        for part in s.split('.') {
            let e: u32 = part.parse().map_err(|_| MultiIndexError::Parse {
                text: s.to_string(),
                reason: format!("bad exponent {part:?}"),
            })?;
            exps.push(e);
        }
        Ok(MultiIndex(exps))
    }
}

/// Binomial coefficient with u64 arithmetic; enough for chart bookkeeping.
pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc = 1u64;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// All indices of length `len` with the given order, graded-lexicographic
/// within the grade.
pub fn indices_of_order(len: usize, order: u32) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    let mut current = vec![0u32; len];
    fill(&mut out, &mut current, 0, order, len);
    out
}

fn fill(out: &mut Vec<MultiIndex>, current: &mut Vec<u32>, pos: usize, left: u32, len: usize) {
    if len == 0 {
        if left == 0 {
            out.push(MultiIndex::new(Vec::new()));
        }
        return;
    }
    if pos == len - 1 {
        current[pos] = left;
        out.push(MultiIndex::new(current.clone()));
        current[pos] = 0;
        return;
    }
    for e in (0..=left).rev() {
        current[pos] = e;
        fill(out, current, pos + 1, left - e, len);
        current[pos] = 0;
    }
}

/// All indices of length `len` with order at most `max_order`, graded.
pub fn indices_up_to(len: usize, max_order: u32) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    for order in 0..=max_order {
        out.extend(indices_of_order(len, order));
    }
    out
}

/// One way of splitting the positions of an index B into s unordered
/// nonempty blocks B'_1..B'_s and a remainder B'', together with the number
/// of set partitions of the positions realizing this shape.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BlockPartition {
    /// Nonempty blocks as a sorted multiset.
    pub blocks: Vec<MultiIndex>,
    /// Possibly empty remainder; blocks and remainder multiply back to B.
    pub remainder: MultiIndex,
    /// Number of position-level set partitions with this shape.
    pub multiplicity: u64,
}

impl BlockPartition {
    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }
}

/// All block partitions of B, s = 0 giving the single term with remainder B.
///
/// Positions are labeled, so repeated axes contribute combinatorial
/// multiplicities: the index `aa` yields the shapes
/// (no blocks, aa, 1), ({a}, a, 2), ({aa}, empty, 1), ({a,a}, empty, 1).
pub fn block_partitions(b: &MultiIndex) -> Vec<BlockPartition> {
    let positions = b.positions();
    let len = b.len();
    // Key: (sorted blocks, remainder); value: count of labelings.
    let mut shapes: BTreeMap<(Vec<MultiIndex>, MultiIndex), u64> = BTreeMap::new();
    // Partial assignment: blocks as position lists plus remainder list.
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut remainder: Vec<usize> = Vec::new();
    assign(
        &positions,
        0,
        len,
        &mut blocks,
        &mut remainder,
        &mut shapes,
    );
    shapes
        .into_iter()
        .map(|((blocks, remainder), multiplicity)| BlockPartition {
            blocks,
            remainder,
            multiplicity,
        })
        .collect()
}

fn assign(
    positions: &[usize],
    next: usize,
    len: usize,
    blocks: &mut Vec<Vec<usize>>,
    remainder: &mut Vec<usize>,
    shapes: &mut BTreeMap<(Vec<MultiIndex>, MultiIndex), u64>,
) {
    if next == positions.len() {
        let mut bs: Vec<MultiIndex> = blocks
            .iter()
            .map(|b| MultiIndex::from_positions(len, b))
            .collect();
        bs.sort();
        let rem = MultiIndex::from_positions(len, remainder);
        *shapes.entry((bs, rem)).or_insert(0) += 1;
        return;
    }
    let p = positions[next];
    // Into the remainder.
    remainder.push(p);
    assign(positions, next + 1, len, blocks, remainder, shapes);
    remainder.pop();
    // Into an existing block: only the first of equal-content blocks, so
    // every set partition is generated exactly once.
    for i in 0..blocks.len() {
        blocks[i].push(p);
        assign(positions, next + 1, len, blocks, remainder, shapes);
        blocks[i].pop();
    }
    // Open a new block.
    blocks.push(vec![p]);
    assign(positions, next + 1, len, blocks, remainder, shapes);
    blocks.pop();
}
