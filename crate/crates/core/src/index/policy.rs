use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{DriftError, Result};
use crate::stream::GranularityChain;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Each finest interval is clustered on its own.
    Independent,
    /// One evolving, exponentially faded clustering; nodes are snapshots.
    Cumulative,
}

impl FromStr for Mode {
    type Err = DriftError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "independent" => Ok(Mode::Independent),
            "cumulative" => Ok(Mode::Cumulative),
            other => Err(DriftError::Config(format!("unknown mode {other:?}"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Independent => "independent",
            Mode::Cumulative => "cumulative",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Full,
    BottomOnly,
    /// Materialize the listed levels; the finest level must be among them.
    Partial(Vec<u64>),
}

/// Which levels store their nodes and which are derived on demand.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaterializationPolicy {
    pub kind: PolicyKind,
    /// Keep derived levels once computed.
    #[serde(default)]
    pub cache_derived: bool,
}

impl MaterializationPolicy {
    pub fn full() -> Self {
        MaterializationPolicy {
            kind: PolicyKind::Full,
            cache_derived: false,
        }
    }

    pub fn bottom_only() -> Self {
        MaterializationPolicy {
            kind: PolicyKind::BottomOnly,
            cache_derived: false,
        }
    }

    pub fn partial(levels: Vec<u64>) -> Self {
        MaterializationPolicy {
            kind: PolicyKind::Partial(levels),
            cache_derived: false,
        }
    }

    pub fn with_cache(mut self, cache_derived: bool) -> Self {
        self.cache_derived = cache_derived;
        self
    }

    /// Per-chain-level materialization flags.
    pub fn resolve(&self, chain: &GranularityChain) -> Result<Vec<bool>> {
        let levels = chain.levels();
        match &self.kind {
            PolicyKind::Full => Ok(vec![true; levels.len()]),
            PolicyKind::BottomOnly => Ok((0..levels.len()).map(|j| j == 0).collect()),
            PolicyKind::Partial(chosen) => {
                for g in chosen {
                    chain.require(*g)?;
                }
                if !chosen.contains(&chain.finest()) {
                    return Err(DriftError::Config(format!(
                        "partial policy must materialize the finest level {}",
                        chain.finest()
                    )));
                }
                Ok(levels.iter().map(|g| chosen.contains(g)).collect())
            }
        }
    }
}

impl FromStr for MaterializationPolicy {
    type Err = DriftError;

    /// Parses `full`, `bottom` or `partial:G1,G2,...`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Self::full()),
            "bottom" | "bottom_only" => Ok(Self::bottom_only()),
            _ => {
                let levels = s
                    .strip_prefix("partial:")
                    .ok_or_else(|| DriftError::Config(format!("unknown policy {s:?}")))?;
                let levels = levels
                    .split(',')
                    .map(|v| {
                        v.trim()
                            .parse::<u64>()
                            .map_err(|_| DriftError::Config(format!("bad level {v:?} in policy")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Self::partial(levels))
            }
        }
    }
}

impl fmt::Display for MaterializationPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            PolicyKind::Full => f.write_str("full"),
            PolicyKind::BottomOnly => f.write_str("bottom"),
            PolicyKind::Partial(levels) => {
                let joined: Vec<String> = levels.iter().map(u64::to_string).collect();
                write!(f, "partial:{}", joined.join(","))
            }
        }
    }
}
