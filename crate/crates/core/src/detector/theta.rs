use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{DriftError, Result};

/// How a level's drift threshold is computed from its calibration window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaMethod {
    /// `mean + k * population stddev`.
    MeanKSigma { k: f64 },
    /// Nearest-rank empirical quantile.
    Quantile { q: f64 },
}

impl Default for ThetaMethod {
    fn default() -> Self {
        ThetaMethod::MeanKSigma { k: 2.0 }
    }
}

impl ThetaMethod {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ThetaMethod::MeanKSigma { k } if !k.is_finite() || k < 0.0 => Err(DriftError::Config(
                format!("k must be a finite nonnegative number, got {k}"),
            )),
            ThetaMethod::Quantile { q } if !(q > 0.0 && q < 1.0) => Err(DriftError::Config(
                format!("quantile must lie in (0, 1), got {q}"),
            )),
            _ => Ok(()),
        }
    }
}

impl FromStr for ThetaMethod {
    type Err = DriftError;

    /// Parses `mean_k_sigma:K` or `quantile:Q`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, value) = s
            .split_once(':')
            .ok_or_else(|| DriftError::Config(format!("expected METHOD:VALUE, got {s:?}")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| DriftError::Config(format!("bad threshold parameter {value:?}")))?;
        let method = match name.trim() {
            "mean_k_sigma" => ThetaMethod::MeanKSigma { k: value },
            "quantile" => ThetaMethod::Quantile { q: value },
            other => {
                return Err(DriftError::Config(format!(
                    "unknown threshold method {other:?}"
                )))
            }
        };
        method.validate()?;
        Ok(method)
    }
}

impl fmt::Display for ThetaMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThetaMethod::MeanKSigma { k } => write!(f, "mean_k_sigma:{k}"),
            ThetaMethod::Quantile { q } => write!(f, "quantile:{q}"),
        }
    }
}

/// Which scores feed a level's calibration window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Calibration {
    /// Each closed node contributes the dissimilarity between the two
    /// halves of its own interval; pair scores are only judged.
    #[default]
    SplitHalf,
    /// Each judged pair score is absorbed after it is judged.
    Prequential,
}

impl FromStr for Calibration {
    type Err = DriftError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "split" | "split_half" => Ok(Calibration::SplitHalf),
            "prequential" => Ok(Calibration::Prequential),
            other => Err(DriftError::Config(format!(
                "unknown calibration source {other:?}"
            ))),
        }
    }
}

impl fmt::Display for Calibration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Calibration::SplitHalf => "split_half",
            Calibration::Prequential => "prequential",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaConfig {
    pub method: ThetaMethod,
    /// Number of most recent calibration scores kept.
    pub window: usize,
    pub calibration: Calibration,
}

impl Default for ThetaConfig {
    fn default() -> Self {
        ThetaConfig {
            method: ThetaMethod::default(),
            window: 20,
            calibration: Calibration::default(),
        }
    }
}

impl ThetaConfig {
    pub fn validate(&self) -> Result<()> {
        self.method.validate()?;
        if self.window == 0 {
            return Err(DriftError::Config("calibration window must be >= 1".into()));
        }
        Ok(())
    }
}

/// Sliding-window threshold learner for one granularity level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaEstimator {
    method: ThetaMethod,
    window: usize,
    scores: VecDeque<f64>,
}

impl ThetaEstimator {
    pub fn new(method: ThetaMethod, window: usize) -> Self {
        ThetaEstimator {
            method,
            window: window.max(1),
            scores: VecDeque::with_capacity(window),
        }
    }

    pub fn from_config(cfg: &ThetaConfig) -> Self {
        ThetaEstimator::new(cfg.method, cfg.window)
    }

    pub fn method(&self) -> ThetaMethod {
        self.method
    }

    pub fn scores(&self) -> impl Iterator<Item = f64> + '_ {
        self.scores.iter().copied()
    }

    /// Absorbs `score` and returns the threshold now in force.
    pub fn update(&mut self, score: f64) -> Option<f64> {
        if self.scores.len() == self.window {
            self.scores.pop_front();
        }
        self.scores.push_back(score);
        self.theta()
    }

    /// Current threshold; undefined until two scores have been absorbed.
    pub fn theta(&self) -> Option<f64> {
        let n = self.scores.len();
        if n < 2 {
            return None;
        }
        match self.method {
            ThetaMethod::MeanKSigma { k } => {
                let mean = self.scores.iter().sum::<f64>() / n as f64;
                let var = self
                    .scores
                    .iter()
                    .map(|s| (s - mean) * (s - mean))
                    .sum::<f64>()
                    / n as f64;
                Some(mean + k * var.sqrt())
            }
            ThetaMethod::Quantile { q } => {
                let mut sorted: Vec<f64> = self.scores.iter().copied().collect();
                sorted.sort_by(f64::total_cmp);
                // 1e-9 keeps exact products such as 0.95 * 20 from rounding up
                let rank = ((q * n as f64) - 1e-9).ceil().clamp(1.0, n as f64) as usize;
                Some(sorted[rank - 1])
            }
        }
    }
}

/// `update_theta` in functional form.
pub fn update_theta(est: &ThetaEstimator, score: f64) -> (ThetaEstimator, Option<f64>) {
    let mut next = est.clone();
    let theta = next.update(score);
    (next, theta)
}
