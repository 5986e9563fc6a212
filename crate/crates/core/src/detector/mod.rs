//! Pairwise comparison of consecutive same-granularity nodes, per-level
//! threshold learning, and extraction of drift sets.

mod theta;

use serde::{Deserialize, Serialize};

pub use theta::{update_theta, Calibration, ThetaConfig, ThetaEstimator, ThetaMethod};

use crate::error::{DriftError, Result};
use crate::index::IndexNode;
use crate::summarizer::Clustering;

/// A detected change between intervals `i` and `i + 1` at granularity `g`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Drift {
    pub g: u64,
    pub i: u64,
    pub boundary_ord: u64,
    pub score: f64,
    pub theta: f64,
}

impl Drift {
    pub fn new(g: u64, i: u64, score: f64, theta: f64) -> Self {
        Drift {
            g,
            i,
            boundary_ord: g * i,
            score,
            theta,
        }
    }
}

/// All drifts found at one granularity, ordered by index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftSet {
    pub g: u64,
    pub drifts: Vec<Drift>,
}

impl DriftSet {
    pub fn empty(g: u64) -> Self {
        DriftSet {
            g,
            drifts: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.drifts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.drifts.is_empty()
    }

    pub fn indices(&self) -> Vec<u64> {
        self.drifts.iter().map(|d| d.i).collect()
    }

    pub fn boundaries(&self) -> Vec<u64> {
        self.drifts.iter().map(|d| d.boundary_ord).collect()
    }
}

/// Weight-normalized symmetric nearest-centroid distance between two
/// clusterings.
pub fn dissimilarity(a: &Clustering, b: &Clustering) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(DriftError::EmptySummary);
    }
    if a.dim != b.dim {
        return Err(DriftError::DimensionMismatch {
            expected: a.dim,
            actual: b.dim,
        });
    }
    let ca: Vec<Vec<f64>> = a.cfs.iter().map(|cf| cf.centroid()).collect();
    let cb: Vec<Vec<f64>> = b.cfs.iter().map(|cf| cf.centroid()).collect();
    let directed = |from: &Clustering, from_c: &[Vec<f64>], to_c: &[Vec<f64>]| -> f64 {
        let total = from.total_weight();
        from.cfs
            .iter()
            .zip(from_c)
            .map(|(cf, mu)| {
                let nearest = to_c
                    .iter()
                    .map(|nu| euclidean(mu, nu))
                    .fold(f64::INFINITY, f64::min);
                cf.n / total * nearest
            })
            .sum()
    };
    Ok(0.5 * directed(a, &ca, &cb) + 0.5 * directed(b, &cb, &ca))
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Prequential detection over a sequence of pair scores: `scores[k]` is
/// the score of the pair `(k + 1, k + 2)`. Each score is judged against the
/// threshold in force before it, then absorbed.
pub fn detect_over_scores(g: u64, scores: &[f64], est: &ThetaEstimator) -> DriftSet {
    let mut est = est.clone();
    let mut out = DriftSet::empty(g);
    for (k, &s) in scores.iter().enumerate() {
        if let Some(theta) = est.theta() {
            if s > theta {
                out.drifts.push(Drift::new(g, k as u64 + 1, s, theta));
            }
        }
        est.update(s);
    }
    out
}

/// Prequential drift detection over a level's ordered nodes.
pub fn detect_drifts(nodes: &[IndexNode], est: &ThetaEstimator) -> DriftSet {
    let g = nodes.first().map_or(0, |n| n.g);
    if nodes.len() < 2 {
        return DriftSet::empty(g);
    }
    let mut est = est.clone();
    let mut out = DriftSet::empty(g);
    for pair in nodes.windows(2) {
        let Ok(s) = dissimilarity(&pair[0].summary, &pair[1].summary) else {
            continue;
        };
        if let Some(theta) = est.theta() {
            if s > theta {
                out.drifts.push(Drift::new(g, pair[0].i, s, theta));
            }
        }
        est.update(s);
    }
    out
}

/// Threshold and warm-up information for one level, reported with query
/// results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelMeta {
    pub g: u64,
    /// Threshold in force after the last judged pair.
    pub theta: Option<f64>,
    pub pairs: u64,
    /// Pairs judged while the threshold was still undefined.
    pub warmup_pairs: u64,
    pub calibration: Calibration,
}

/// Online detector for one level. Nodes are fed in index order as they
/// close; offline detection replays the same nodes through it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelDetector {
    g: u64,
    calibration: Calibration,
    estimator: ThetaEstimator,
    last: Option<(u64, Clustering)>,
    drifts: Vec<Drift>,
    pairs: u64,
    warmup_pairs: u64,
}

impl LevelDetector {
    pub fn new(g: u64, cfg: &ThetaConfig) -> Self {
        LevelDetector {
            g,
            calibration: cfg.calibration,
            estimator: ThetaEstimator::from_config(cfg),
            last: None,
            drifts: Vec::new(),
            pairs: 0,
            warmup_pairs: 0,
        }
    }

    pub fn g(&self) -> u64 {
        self.g
    }

    pub fn estimator(&self) -> &ThetaEstimator {
        &self.estimator
    }

    /// Feeds the next closed node; returns the drift it completes, if any.
    pub fn observe(&mut self, node: &IndexNode) -> Option<Drift> {
        debug_assert_eq!(node.g, self.g);
        if self.calibration == Calibration::SplitHalf {
            if let Some(null) = node.null_score {
                self.estimator.update(null);
            }
        }
        let mut found = None;
        if let Some((prev_i, prev)) = &self.last {
            if let Ok(s) = dissimilarity(prev, &node.summary) {
                self.pairs += 1;
                match self.estimator.theta() {
                    Some(theta) if s > theta => {
                        found = Some(Drift::new(self.g, *prev_i, s, theta));
                    }
                    Some(_) => {}
                    None => self.warmup_pairs += 1,
                }
                if self.calibration == Calibration::Prequential {
                    self.estimator.update(s);
                }
            }
        }
        self.last = Some((node.i, node.summary.clone()));
        if let Some(d) = &found {
            self.drifts.push(d.clone());
        }
        found
    }

    pub fn drift_set(&self) -> DriftSet {
        DriftSet {
            g: self.g,
            drifts: self.drifts.clone(),
        }
    }

    pub fn meta(&self) -> LevelMeta {
        LevelMeta {
            g: self.g,
            theta: self.estimator.theta(),
            pairs: self.pairs,
            warmup_pairs: self.warmup_pairs,
            calibration: self.calibration,
        }
    }
}

/// Runs a fresh [`LevelDetector`] over `nodes`.
pub fn detect_level(g: u64, nodes: &[IndexNode], cfg: &ThetaConfig) -> LevelDetector {
    let mut det = LevelDetector::new(g, cfg);
    for node in nodes {
        det.observe(node);
    }
    det
}
