use serde::{Deserialize, Serialize};

use super::cf::ClusterFeature;
use crate::error::{DriftError, Result};
use crate::stream::DataPoint;

/// CFs whose weight falls below this after decay are discarded.
pub const DROP_FLOOR: f64 = 1e-6;

/// A set of micro-cluster summaries describing one interval (independent
/// mode) or the decayed history up to an interval boundary (cumulative
/// mode).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Clustering {
    pub cfs: Vec<ClusterFeature>,
    pub dim: usize,
}

impl Clustering {
    pub fn empty(dim: usize) -> Self {
        Clustering {
            cfs: Vec::new(),
            dim,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.cfs.is_empty()
    }

    pub fn len(&self) -> usize {
        self.cfs.len()
    }

    pub fn total_weight(&self) -> f64 {
        self.cfs.iter().map(|cf| cf.n).sum()
    }

    /// Sequential leader step: `x` joins the CF with the nearest centroid
    /// among those within `epsilon` (lowest index on ties), otherwise it
    /// founds a new CF.
    pub fn leader_insert(&mut self, x: &[f64], epsilon: f64) -> Result<()> {
        if self.cfs.is_empty() && self.dim == 0 {
            self.dim = x.len();
        }
        if x.len() != self.dim {
            return Err(DriftError::DimensionMismatch {
                expected: self.dim,
                actual: x.len(),
            });
        }
        let mut best: Option<(usize, f64)> = None;
        for (idx, cf) in self.cfs.iter().enumerate() {
            let dist = cf.distance_to(x);
            if dist <= epsilon && best.is_none_or(|(_, d)| dist < d) {
                best = Some((idx, dist));
            }
        }
        match best {
            Some((idx, _)) => self.cfs[idx].add(x),
            None => {
                self.cfs.push(ClusterFeature::from_point(x));
                Ok(())
            }
        }
    }

    /// Sum of every member CF.
    pub fn collapse(&self) -> ClusterFeature {
        let mut total = ClusterFeature::empty(self.dim);
        for cf in &self.cfs {
            // dimensions are uniform inside one clustering
            let _ = total.absorb(cf);
        }
        total
    }
}

/// Independent clustering of one interval's points.
pub fn cluster_points(points: &[DataPoint], epsilon: f64) -> Result<Clustering> {
    let dim = points.first().map_or(0, DataPoint::dim);
    let mut out = Clustering::empty(dim);
    for p in points {
        out.leader_insert(&p.features, epsilon)?;
    }
    Ok(out)
}

/// Greedy agglomeration: repeatedly merges the pair of CFs with the
/// smallest centroid distance while that distance is at most `epsilon`.
/// Ties go to the lexicographically lowest `(a, b)` pair of current
/// positions; a merged CF takes the position of its lower member.
pub fn agglomerate(cfs: Vec<ClusterFeature>, epsilon: f64) -> Clustering {
    let dim = cfs.first().map_or(0, ClusterFeature::dim);
    let mut slots: Vec<Option<ClusterFeature>> = cfs.into_iter().map(Some).collect();
    let len = slots.len();

    // best[a] = nearest live partner b > a as (distance, b), lowest b on ties
    let nearest = |slots: &[Option<ClusterFeature>], a: usize| -> Option<(f64, usize)> {
        let base = slots[a].as_ref()?;
        let mut best: Option<(f64, usize)> = None;
        for (b, other) in slots.iter().enumerate().skip(a + 1) {
            if let Some(other) = other {
                let d = base.centroid_distance(other);
                if best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, b));
                }
            }
        }
        best
    };
    let mut best: Vec<Option<(f64, usize)>> = (0..len).map(|a| nearest(&slots, a)).collect();

    loop {
        let mut pick: Option<(f64, usize, usize)> = None;
        for (a, entry) in best.iter().enumerate() {
            if let Some((d, b)) = *entry {
                if pick.is_none_or(|(pd, _, _)| d < pd) {
                    pick = Some((d, a, b));
                }
            }
        }
        let Some((d, a, b)) = pick else { break };
        if d > epsilon {
            break;
        }
        let absorbed = slots[b].take().expect("live partner");
        let merged = slots[a].as_mut().expect("live slot");
        let _ = merged.absorb(&absorbed);
        best[b] = None;
        best[a] = nearest(&slots, a);
        for c in 0..a {
            let Some((cd, cb)) = best[c] else { continue };
            if cb == a || cb == b {
                best[c] = nearest(&slots, c);
            } else {
                let nd = slots[c]
                    .as_ref()
                    .expect("row with a partner is live")
                    .centroid_distance(slots[a].as_ref().expect("merged slot"));
                if nd < cd || (nd == cd && a < cb) {
                    best[c] = Some((nd, a));
                }
            }
        }
        let stale: Vec<usize> = (a + 1..b)
            .filter(|&c| matches!(best[c], Some((_, cb)) if cb == b))
            .collect();
        for c in stale {
            best[c] = nearest(&slots, c);
        }
    }

    Clustering {
        cfs: slots.into_iter().flatten().collect(),
        dim,
    }
}

/// Exponential fading for cumulative clustering.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayConfig {
    /// Decay rate; each finest-granularity tick scales summaries by `2^-lambda`.
    pub lambda: f64,
}

impl Default for DecayConfig {
    fn default() -> Self {
        DecayConfig { lambda: 1.0 }
    }
}

impl DecayConfig {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(DriftError::Config(format!(
                "decay rate must be a finite nonnegative number, got {lambda}"
            )));
        }
        Ok(DecayConfig { lambda })
    }

    pub fn factor(&self) -> f64 {
        (-self.lambda).exp2()
    }
}

pub fn decay(c: &Clustering, cfg: &DecayConfig) -> Clustering {
    let factor = cfg.factor();
    if factor == 1.0 {
        return c.clone();
    }
    let cfs = c
        .cfs
        .iter()
        .filter_map(|cf| {
            let mut cf = cf.clone();
            cf.scale(factor);
            (cf.n >= DROP_FLOOR).then_some(cf)
        })
        .collect();
    Clustering { cfs, dim: c.dim }
}

/// One cumulative tick: fade the running state, then leader-insert the
/// closing interval's points into it.
pub fn cumulative_update(
    state: &Clustering,
    points: &[DataPoint],
    epsilon: f64,
    cfg: &DecayConfig,
) -> Result<Clustering> {
    let mut next = decay(state, cfg);
    for p in points {
        next.leader_insert(&p.features, epsilon)?;
    }
    Ok(next)
}
