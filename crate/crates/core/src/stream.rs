//! Stream vocabulary: points, granularity chains, count-based intervals and
//! the closed ordinal ranges used by every query.
//!
//! Ordinals are 1-based. Interval `i` at granularity `g` covers ordinals
//! `(i-1)*g + 1 ..= i*g`, so intervals at one granularity are disjoint and
//! consecutive, and a divisibility chain keeps coarse boundaries aligned
//! with fine ones.

use serde::{Deserialize, Serialize};

use crate::error::{DriftError, Result};

/// One stream element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataPoint {
    /// 1-based arrival position.
    pub ord: u64,
    /// Optional wall-clock stamp, informational only.
    pub ts: Option<f64>,
    pub features: Vec<f64>,
}

impl DataPoint {
    pub fn new(ord: u64, features: Vec<f64>) -> Self {
        DataPoint {
            ord,
            ts: None,
            features,
        }
    }

    pub fn dim(&self) -> usize {
        self.features.len()
    }
}

/// Ordered granularities `g_0 < g_1 < ... < g_k` where each level divides
/// the next one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct GranularityChain {
    levels: Vec<u64>,
}

impl GranularityChain {
    pub fn new(levels: Vec<u64>) -> Result<Self> {
        if levels.is_empty() {
            return Err(DriftError::InvalidChain("chain has no levels".into()));
        }
        if levels[0] == 0 {
            return Err(DriftError::InvalidChain("granularity must be >= 1".into()));
        }
        for pair in levels.windows(2) {
            if pair[1] <= pair[0] {
                return Err(DriftError::InvalidChain(format!(
                    "levels must be strictly increasing ({} then {})",
                    pair[0], pair[1]
                )));
            }
            if pair[1] % pair[0] != 0 {
                return Err(DriftError::InvalidChain(format!(
                    "{} does not divide {}",
                    pair[0], pair[1]
                )));
            }
        }
        Ok(GranularityChain { levels })
    }

    pub fn levels(&self) -> &[u64] {
        &self.levels
    }

    pub fn finest(&self) -> u64 {
        self.levels[0]
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Position of `g` in the chain (0 = finest).
    pub fn position(&self, g: u64) -> Option<usize> {
        self.levels.binary_search(&g).ok()
    }

    pub fn require(&self, g: u64) -> Result<usize> {
        self.position(g).ok_or(DriftError::UnknownGranularity(g))
    }

    pub fn contains(&self, g: u64) -> bool {
        self.position(g).is_some()
    }

    /// `a ≺≺ b`: `a` is a strictly finer chain level than `b`.
    pub fn finer(&self, a: u64, b: u64) -> bool {
        matches!((self.position(a), self.position(b)), (Some(x), Some(y)) if x < y)
    }
}

impl TryFrom<Vec<u64>> for GranularityChain {
    type Error = DriftError;

    fn try_from(levels: Vec<u64>) -> Result<Self> {
        GranularityChain::new(levels)
    }
}

impl From<GranularityChain> for Vec<u64> {
    fn from(chain: GranularityChain) -> Self {
        chain.levels
    }
}

/// Closed range of ordinals `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OrdRange {
    pub lo: u64,
    pub hi: u64,
}

impl OrdRange {
    pub fn new(lo: u64, hi: u64) -> Self {
        debug_assert!(lo <= hi);
        OrdRange { lo, hi }
    }

    pub fn len(&self) -> u64 {
        self.hi - self.lo + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Interval `i` at granularity `g`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Interval {
    pub g: u64,
    pub i: u64,
}

impl Interval {
    pub fn new(g: u64, i: u64) -> Self {
        Interval { g, i }
    }

    pub fn start_ord(&self) -> u64 {
        (self.i - 1) * self.g + 1
    }

    pub fn end_ord(&self) -> u64 {
        self.i * self.g
    }

    pub fn range(&self) -> OrdRange {
        OrdRange::new(self.start_ord(), self.end_ord())
    }
}

pub fn interval_bounds(g: u64, i: u64) -> (u64, u64) {
    debug_assert!(g >= 1 && i >= 1);
    let iv = Interval::new(g, i);
    (iv.start_ord(), iv.end_ord())
}

/// Two-interval extent `I_i ∪ I_{i+1}` of the drift between intervals `i`
/// and `i + 1` at granularity `g`.
pub fn window(g: u64, i: u64) -> OrdRange {
    debug_assert!(g >= 1 && i >= 1);
    OrdRange::new((i - 1) * g + 1, (i + 1) * g)
}

/// Closed-interval containment of `inner` in `outer`.
pub fn contains(outer: OrdRange, inner: OrdRange) -> bool {
    outer.lo <= inner.lo && inner.hi <= outer.hi
}
