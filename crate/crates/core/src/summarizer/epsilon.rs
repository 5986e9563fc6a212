use serde::{Deserialize, Serialize};

use crate::error::{DriftError, Result};
use crate::stream::DataPoint;

/// Lower bound on a learned clustering radius.
pub const EPSILON_FLOOR: f64 = 1e-12;

/// Settings for learning the clustering radius from the stream prefix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonConfig {
    /// Fraction of the mean pairwise distance used as the radius.
    pub alpha: f64,
    /// Number of leading points used for calibration.
    pub sample_size: usize,
}

impl Default for EpsilonConfig {
    fn default() -> Self {
        EpsilonConfig {
            alpha: 0.5,
            sample_size: 200,
        }
    }
}

impl EpsilonConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(DriftError::Config(format!(
                "epsilon alpha must lie in (0, 1], got {}",
                self.alpha
            )));
        }
        if self.sample_size < 2 {
            return Err(DriftError::Config(
                "epsilon sample size must be at least 2".into(),
            ));
        }
        Ok(())
    }
}

/// `alpha` times the mean pairwise Euclidean distance over the first
/// `sample_size` points, floored at [`EPSILON_FLOOR`].
pub fn learn_epsilon(sample: &[DataPoint], cfg: &EpsilonConfig) -> Result<f64> {
    let take = sample.len().min(cfg.sample_size);
    if take < 2 {
        return Err(DriftError::InsufficientCalibration(take));
    }
    let sample = &sample[..take];
    let mut total = 0.0;
    let mut pairs = 0u64;
    for (a, p) in sample.iter().enumerate() {
        for q in &sample[a + 1..] {
            if p.dim() != q.dim() {
                return Err(DriftError::DimensionMismatch {
                    expected: p.dim(),
                    actual: q.dim(),
                });
            }
            total += p
                .features
                .iter()
                .zip(&q.features)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt();
            pairs += 1;
        }
    }
    Ok((cfg.alpha * total / pairs as f64).max(EPSILON_FLOOR))
}

/// Agglomeration radius for a coarser level: `epsilon * (g / g0)^(1/d)`.
pub fn level_epsilon(epsilon: f64, g: u64, g0: u64, dim: usize) -> f64 {
    if g == g0 || dim == 0 {
        return epsilon;
    }
    epsilon * (g as f64 / g0 as f64).powf(1.0 / dim as f64)
}
