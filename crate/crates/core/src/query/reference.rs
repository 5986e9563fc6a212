//! Literal set-comprehension evaluation of the three query kinds. Slow by
//! construction; it exists to check the traversal evaluator.

use super::{
    check_refinement, check_synthesis, DriftPair, DriftSets, QueryKind, QueryOptions, QueryResult,
    QuerySpec,
};
use crate::detector::Drift;
use crate::error::{DriftError, Result};
use crate::stream::{contains, window, Interval, OrdRange};

fn extent(d: &Drift, whole_window: bool) -> OrdRange {
    if whole_window {
        window(d.g, d.i)
    } else {
        Interval::new(d.g, d.i).range()
    }
}

/// `x` lies inside the window of source `src` (refinement containment).
fn refines(src: &Drift, x: &Drift, opts: QueryOptions) -> bool {
    contains(window(src.g, src.i), extent(x, opts.window_containment))
}

/// The window of `x` holds source `src` (synthesis containment).
fn synthesizes(src: &Drift, x: &Drift, opts: QueryOptions) -> bool {
    contains(window(x.g, x.i), extent(src, opts.window_containment))
}

pub fn reference_eval(
    sets: &DriftSets,
    spec: QuerySpec,
    opts: QueryOptions,
) -> Result<QueryResult> {
    let levels: Vec<u64> = sets.keys().copied().collect();
    let all = |pred: &dyn Fn(u64) -> bool| -> Vec<&Drift> {
        sets.iter()
            .filter(|(g, _)| pred(**g))
            .flat_map(|(_, s)| s.drifts.iter())
            .collect()
    };
    match spec {
        QuerySpec::Unary { g } => {
            let set = sets.get(&g).ok_or(DriftError::UnknownGranularity(g))?;
            Ok(QueryResult::unary(set.clone(), Vec::new()))
        }
        QuerySpec::Refinement { g_s, g_t } => {
            check_refinement(&levels, g_s, g_t)?;
            let in_range = all(&|g| g_t <= g && g < g_s);
            let mut pairs = Vec::new();
            let mut unmatched = Vec::new();
            for src in &sets[&g_s].drifts {
                // { x_j^g : g_t ≼ g ≺ g_s, I_j^g ⊆ W_i,
                //   ∄ x_k^g' with g_t ≼ g' ≺ g and I_k^g' ⊆ W_i }
                let mut matched: Vec<&Drift> = in_range
                    .iter()
                    .copied()
                    .filter(|x| refines(src, x, opts))
                    .filter(|x| !in_range.iter().any(|y| y.g < x.g && refines(src, y, opts)))
                    .collect();
                matched.sort_by_key(|x| (x.g, x.i));
                if matched.is_empty() {
                    unmatched.push(src.clone());
                }
                pairs.extend(matched.into_iter().map(|m| DriftPair {
                    source: src.clone(),
                    matched: m.clone(),
                }));
            }
            Ok(QueryResult::paired(
                QueryKind::Refinement,
                g_s,
                g_t,
                pairs,
                unmatched,
            ))
        }
        QuerySpec::Synthesis { g_s, g_t } => {
            check_synthesis(&levels, g_s, g_t)?;
            let in_range = all(&|g| g_s < g && g <= g_t);
            let mut pairs = Vec::new();
            let mut unmatched = Vec::new();
            for src in &sets[&g_s].drifts {
                // { x_j^g : g_s ≺ g ≼ g_t, I_i ⊆ W_j^g,
                //   ∄ x_k^g' with g ≺ g' ≼ g_t and I_i ⊆ W_k^g' }
                let mut matched: Vec<&Drift> = in_range
                    .iter()
                    .copied()
                    .filter(|x| synthesizes(src, x, opts))
                    .filter(|x| {
                        !in_range
                            .iter()
                            .any(|y| y.g > x.g && synthesizes(src, y, opts))
                    })
                    .collect();
                matched.sort_by_key(|x| (x.g, x.i));
                if matched.is_empty() {
                    unmatched.push(src.clone());
                }
                pairs.extend(matched.into_iter().map(|m| DriftPair {
                    source: src.clone(),
                    matched: m.clone(),
                }));
            }
            Ok(QueryResult::paired(
                QueryKind::Synthesis,
                g_s,
                g_t,
                pairs,
                unmatched,
            ))
        }
    }
}
