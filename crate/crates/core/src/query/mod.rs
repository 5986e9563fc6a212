//! Unary, refinement and synthesis drift queries.
//!
//! A refinement query pairs every source drift with the drifts of the
//! finest level (no finer than the target) whose interval lies inside the
//! source drift's two-interval window. A synthesis query pairs every
//! source drift with the drifts of the coarsest level (no coarser than the
//! target) whose window contains the source drift's interval. Candidate
//! indices are found by boundary arithmetic and binary search over each
//! level's sorted drift list; [`reference_eval`] is the literal
//! enumeration used to check this.

mod reference;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use reference::reference_eval;

use crate::detector::{detect_level, Drift, DriftSet, LevelMeta};
use crate::error::{DriftError, Result};
use crate::index::DriftIndex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QueryKind {
    #[serde(rename = "UQ")]
    Unary,
    #[serde(rename = "RQ")]
    Refinement,
    #[serde(rename = "SQ")]
    Synthesis,
}

impl fmt::Display for QueryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QueryKind::Unary => "UQ",
            QueryKind::Refinement => "RQ",
            QueryKind::Synthesis => "SQ",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct QueryOptions {
    /// Test the matched drift's whole two-interval window instead of its
    /// single interval.
    pub window_containment: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuerySpec {
    Unary { g: u64 },
    Refinement { g_s: u64, g_t: u64 },
    Synthesis { g_s: u64, g_t: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftPair {
    pub source: Drift,
    #[serde(rename = "match")]
    pub matched: Drift,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryResult {
    pub kind: QueryKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_s: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_t: Option<u64>,
    /// Unary answers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drifts: Option<Vec<Drift>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs: Option<Vec<DriftPair>>,
    /// Source drifts without a match; diagnostic, not part of the answer set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unmatched: Option<Vec<Drift>>,
    #[serde(default)]
    pub levels: Vec<LevelMeta>,
}

impl QueryResult {
    pub fn unary(set: DriftSet, levels: Vec<LevelMeta>) -> Self {
        QueryResult {
            kind: QueryKind::Unary,
            g: Some(set.g),
            g_s: None,
            g_t: None,
            drifts: Some(set.drifts),
            pairs: None,
            unmatched: None,
            levels,
        }
    }

    fn paired(
        kind: QueryKind,
        g_s: u64,
        g_t: u64,
        pairs: Vec<DriftPair>,
        unmatched: Vec<Drift>,
    ) -> Self {
        QueryResult {
            kind,
            g: None,
            g_s: Some(g_s),
            g_t: Some(g_t),
            drifts: None,
            pairs: Some(pairs),
            unmatched: Some(unmatched),
            levels: Vec::new(),
        }
    }

    pub fn pairs(&self) -> &[DriftPair] {
        self.pairs.as_deref().unwrap_or(&[])
    }

    pub fn unmatched(&self) -> &[Drift] {
        self.unmatched.as_deref().unwrap_or(&[])
    }

    pub fn drifts(&self) -> &[Drift] {
        self.drifts.as_deref().unwrap_or(&[])
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("query results always serialize")
    }
}

/// Drift sets keyed by granularity; the keys act as the level chain.
pub type DriftSets = BTreeMap<u64, DriftSet>;

/// All drifts at `g`, with the level's threshold metadata.
pub fn uq_with_meta(index: &DriftIndex, g: u64) -> Result<(DriftSet, LevelMeta)> {
    let nodes = index.derive_level(g)?;
    let det = detect_level(g, &nodes, &index.config().theta);
    Ok((det.drift_set(), det.meta()))
}

pub fn uq(index: &DriftIndex, g: u64) -> Result<DriftSet> {
    Ok(uq_with_meta(index, g)?.0)
}

pub fn uq_result(index: &DriftIndex, g: u64) -> Result<QueryResult> {
    let (set, meta) = uq_with_meta(index, g)?;
    Ok(QueryResult::unary(set, vec![meta]))
}

fn collect_levels(index: &DriftIndex, levels: &[u64]) -> Result<(DriftSets, Vec<LevelMeta>)> {
    let mut sets = DriftSets::new();
    let mut metas = Vec::new();
    for &g in levels {
        let (set, meta) = uq_with_meta(index, g)?;
        sets.insert(g, set);
        metas.push(meta);
    }
    Ok((sets, metas))
}

fn chain_between(index: &DriftIndex, lo: u64, hi: u64) -> Vec<u64> {
    index
        .chain()
        .levels()
        .iter()
        .copied()
        .filter(|g| (lo..=hi).contains(g))
        .collect()
}

pub fn rq(index: &DriftIndex, g_s: u64, g_t: u64, opts: QueryOptions) -> Result<QueryResult> {
    check_refinement(index.chain().levels(), g_s, g_t)?;
    let (sets, metas) = collect_levels(index, &chain_between(index, g_t, g_s))?;
    let mut result = refine(&sets, g_s, g_t, opts)?;
    result.levels = metas;
    Ok(result)
}

pub fn sq(index: &DriftIndex, g_s: u64, g_t: u64, opts: QueryOptions) -> Result<QueryResult> {
    check_synthesis(index.chain().levels(), g_s, g_t)?;
    let (sets, metas) = collect_levels(index, &chain_between(index, g_s, g_t))?;
    let mut result = synthesize(&sets, g_s, g_t, opts)?;
    result.levels = metas;
    Ok(result)
}

pub fn run_query(index: &DriftIndex, spec: QuerySpec, opts: QueryOptions) -> Result<QueryResult> {
    match spec {
        QuerySpec::Unary { g } => uq_result(index, g),
        QuerySpec::Refinement { g_s, g_t } => rq(index, g_s, g_t, opts),
        QuerySpec::Synthesis { g_s, g_t } => sq(index, g_s, g_t, opts),
    }
}

fn position(levels: &[u64], g: u64) -> Result<usize> {
    levels
        .iter()
        .position(|&x| x == g)
        .ok_or(DriftError::UnknownGranularity(g))
}

pub(crate) fn check_refinement(levels: &[u64], g_s: u64, g_t: u64) -> Result<()> {
    let (s, t) = (position(levels, g_s)?, position(levels, g_t)?);
    if t >= s {
        return Err(DriftError::InvalidRefinement { g_s, g_t });
    }
    Ok(())
}

pub(crate) fn check_synthesis(levels: &[u64], g_s: u64, g_t: u64) -> Result<()> {
    let (s, t) = (position(levels, g_s)?, position(levels, g_t)?);
    if t <= s {
        return Err(DriftError::InvalidSynthesis { g_s, g_t });
    }
    Ok(())
}

/// Drifts of `set` whose index lies in `lo..=hi`.
fn drifts_in(set: &DriftSet, lo: u64, hi: u64) -> &[Drift] {
    if lo > hi {
        return &[];
    }
    let start = set.drifts.partition_point(|d| d.i < lo);
    let end = set.drifts.partition_point(|d| d.i <= hi);
    &set.drifts[start..end]
}

/// Refinement over precomputed drift sets.
pub fn refine(sets: &DriftSets, g_s: u64, g_t: u64, opts: QueryOptions) -> Result<QueryResult> {
    let levels: Vec<u64> = sets.keys().copied().collect();
    check_refinement(&levels, g_s, g_t)?;
    let candidates: Vec<u64> = levels
        .iter()
        .copied()
        .filter(|&g| g >= g_t && g < g_s)
        .collect();
    let mut pairs = Vec::new();
    let mut unmatched = Vec::new();
    for src in &sets[&g_s].drifts {
        // window(g_s, i) = [(i-1) g_s + 1, (i+1) g_s]
        let lo_ord = (src.i - 1) * g_s;
        let hi_ord = (src.i + 1) * g_s;
        let mut found = false;
        for &g in &candidates {
            // I_j ⊆ window  <=>  (j-1) g >= lo_ord  and  j g <= hi_ord
            let j_lo = lo_ord.div_ceil(g) + 1;
            let mut j_hi = hi_ord / g;
            if opts.window_containment {
                // (j+1) g <= hi_ord
                j_hi = j_hi.saturating_sub(1);
            }
            let hits = drifts_in(&sets[&g], j_lo, j_hi);
            if !hits.is_empty() {
                pairs.extend(hits.iter().map(|m| DriftPair {
                    source: src.clone(),
                    matched: m.clone(),
                }));
                found = true;
                break;
            }
        }
        if !found {
            unmatched.push(src.clone());
        }
    }
    Ok(QueryResult::paired(
        QueryKind::Refinement,
        g_s,
        g_t,
        pairs,
        unmatched,
    ))
}

/// Synthesis over precomputed drift sets.
pub fn synthesize(sets: &DriftSets, g_s: u64, g_t: u64, opts: QueryOptions) -> Result<QueryResult> {
    let levels: Vec<u64> = sets.keys().copied().collect();
    check_synthesis(&levels, g_s, g_t)?;
    let candidates: Vec<u64> = levels
        .iter()
        .rev()
        .copied()
        .filter(|&g| g > g_s && g <= g_t)
        .collect();
    let mut pairs = Vec::new();
    let mut unmatched = Vec::new();
    for src in &sets[&g_s].drifts {
        // the source extent: its interval, or its window under the strict flag
        let lo_ord = (src.i - 1) * g_s;
        let hi_ord = if opts.window_containment {
            (src.i + 1) * g_s
        } else {
            src.i * g_s
        };
        let mut found = false;
        for &g in &candidates {
            // window(g, j) ⊇ [lo_ord + 1, hi_ord]  <=>  (j-1) g <= lo_ord  and  (j+1) g >= hi_ord
            let j_hi = lo_ord / g + 1;
            let j_lo = hi_ord.div_ceil(g).saturating_sub(1).max(1);
            let hits = drifts_in(&sets[&g], j_lo, j_hi);
            if !hits.is_empty() {
                pairs.extend(hits.iter().map(|m| DriftPair {
                    source: src.clone(),
                    matched: m.clone(),
                }));
                found = true;
                break;
            }
        }
        if !found {
            unmatched.push(src.clone());
        }
    }
    Ok(QueryResult::paired(
        QueryKind::Synthesis,
        g_s,
        g_t,
        pairs,
        unmatched,
    ))
}
