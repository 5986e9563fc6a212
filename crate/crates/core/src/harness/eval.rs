use serde::{Deserialize, Serialize};

use super::synth::GroundTruth;
use crate::detector::DriftSet;

/// Detection quality at one granularity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelScore {
    pub g: u64,
    /// Matching tolerance in ordinals.
    pub tau: u64,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Greedy one-to-one matching of detected boundaries to true drift
/// ordinals. Detections are taken in boundary order; each claims the
/// nearest unclaimed truth within `tau` (the lower ordinal on ties).
/// Empty denominators count as perfect scores.
pub fn score_detection(detected: &DriftSet, truth: &GroundTruth, tau: u64) -> LevelScore {
    let truths = &truth.drifts;
    let mut claimed = vec![false; truths.len()];
    let mut boundaries = detected.boundaries();
    boundaries.sort_unstable();
    let mut tp = 0u64;
    for b in &boundaries {
        let split = truths.partition_point(|t| t < b);
        let left = (0..split)
            .rev()
            .take_while(|&k| b - truths[k] <= tau)
            .find(|&k| !claimed[k]);
        let right = (split..truths.len())
            .take_while(|&k| truths[k] - b <= tau)
            .find(|&k| !claimed[k]);
        let pick = match (left, right) {
            (Some(l), Some(r)) => Some(if truths[r] - b < b - truths[l] { r } else { l }),
            (l, r) => l.or(r),
        };
        if let Some(k) = pick {
            claimed[k] = true;
            tp += 1;
        }
    }
    let fp = boundaries.len() as u64 - tp;
    let fn_ = truths.len() as u64 - tp;
    let ratio = |num: u64, den: u64| {
        if den == 0 {
            1.0
        } else {
            num as f64 / den as f64
        }
    };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    LevelScore {
        g: detected.g,
        tau,
        tp,
        fp,
        fn_,
        precision,
        recall,
        f1,
    }
}
