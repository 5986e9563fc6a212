//! Seeded Gaussian-mixture streams with abrupt mean shifts.
//!
//! Component means start uniformly in `[-MEAN_SPREAD, MEAN_SPREAD]^d` and
//! every component has unit standard deviation. A drift at ordinal `t`
//! moves every component mean by `magnitude` along its own random
//! direction, effective from ordinal `t + 1`, so the change falls exactly
//! between intervals that end at `t`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{DriftError, Result};
use crate::stream::DataPoint;

pub const MEAN_SPREAD: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    /// Number of points covered by this segment.
    pub length: u64,
    /// Drift period inside the segment.
    pub period: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftSchedule {
    At(Vec<u64>),
    Periodic(u64),
    /// Consecutive segments with their own periods (varying change rate).
    Segments(Vec<Segment>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub dim: usize,
    pub points: u64,
    pub schedule: DriftSchedule,
    /// Mean shift in units of component standard deviation.
    pub magnitude: f64,
    #[serde(default = "default_components")]
    pub components: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_components() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GroundTruth {
    pub drifts: Vec<u64>,
}

impl GroundTruth {
    pub fn new(mut drifts: Vec<u64>) -> Self {
        drifts.sort_unstable();
        drifts.dedup();
        GroundTruth { drifts }
    }

    pub fn len(&self) -> usize {
        self.drifts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.drifts.is_empty()
    }
}

impl SyntheticConfig {
    pub fn periodic(dim: usize, points: u64, period: u64, magnitude: f64, seed: u64) -> Self {
        SyntheticConfig {
            dim,
            points,
            schedule: DriftSchedule::Periodic(period),
            magnitude,
            components: default_components(),
            seed,
        }
    }

    /// Drift ordinals implied by the schedule.
    pub fn drift_positions(&self) -> Result<Vec<u64>> {
        let n = self.points;
        let positions: Vec<u64> = match &self.schedule {
            DriftSchedule::At(list) => list.clone(),
            DriftSchedule::Periodic(period) => {
                if *period < 2 {
                    return Err(DriftError::Config("drift period must be at least 2".into()));
                }
                (1..).map(|k| k * period).take_while(|&o| o < n).collect()
            }
            DriftSchedule::Segments(segments) => {
                let mut out = Vec::new();
                let mut start = 0u64;
                for seg in segments {
                    if seg.period < 2 || seg.length == 0 {
                        return Err(DriftError::Config(
                            "segments need length >= 1 and period >= 2".into(),
                        ));
                    }
                    let end = start + seg.length;
                    let mut o = start + seg.period;
                    while o < end.min(n) {
                        out.push(o);
                        o += seg.period;
                    }
                    start = end;
                }
                out
            }
        };
        for pair in positions.windows(2) {
            if pair[1] <= pair[0] {
                return Err(DriftError::Config(
                    "drift positions must be strictly increasing".into(),
                ));
            }
        }
        if let Some(bad) = positions.iter().find(|&&o| o <= 1 || o >= n) {
            return Err(DriftError::Config(format!(
                "drift position {bad} outside (1, {n})"
            )));
        }
        Ok(positions)
    }

    pub fn validate(&self) -> Result<Vec<u64>> {
        if self.dim == 0 {
            return Err(DriftError::Config("dimension must be at least 1".into()));
        }
        if self.components == 0 {
            return Err(DriftError::Config(
                "need at least one mixture component".into(),
            ));
        }
        if !(self.magnitude >= 0.0 && self.magnitude.is_finite()) {
            return Err(DriftError::Config(format!(
                "magnitude must be finite and nonnegative, got {}",
                self.magnitude
            )));
        }
        self.drift_positions()
    }
}

/// Lazily generated synthetic stream.
pub struct SyntheticStream {
    rng: ChaCha8Rng,
    means: Vec<Vec<f64>>,
    drifts: Vec<u64>,
    next_drift: usize,
    magnitude: f64,
    dim: usize,
    ord: u64,
    points: u64,
}

impl SyntheticStream {
    pub fn new(cfg: &SyntheticConfig) -> Result<Self> {
        let drifts = cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let means = (0..cfg.components)
            .map(|_| {
                (0..cfg.dim)
                    .map(|_| rng.random_range(-MEAN_SPREAD..MEAN_SPREAD))
                    .collect()
            })
            .collect();
        Ok(SyntheticStream {
            rng,
            means,
            drifts,
            next_drift: 0,
            magnitude: cfg.magnitude,
            dim: cfg.dim,
            ord: 0,
            points: cfg.points,
        })
    }

    pub fn truth(&self) -> GroundTruth {
        GroundTruth::new(self.drifts.clone())
    }

    fn shift(&mut self) {
        for mean in &mut self.means {
            let dir: Vec<f64> = loop {
                let v: Vec<f64> = (0..self.dim)
                    .map(|_| self.rng.sample(StandardNormal))
                    .collect();
                if v.iter().any(|x: &f64| *x != 0.0) {
                    break v;
                }
            };
            let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
            for (m, d) in mean.iter_mut().zip(dir) {
                *m += self.magnitude * d / norm;
            }
        }
    }
}

impl Iterator for SyntheticStream {
    type Item = DataPoint;

    fn next(&mut self) -> Option<DataPoint> {
        if self.ord >= self.points {
            return None;
        }
        if self.drifts.get(self.next_drift) == Some(&self.ord) {
            self.shift();
            self.next_drift += 1;
        }
        self.ord += 1;
        let k = self.rng.random_range(0..self.means.len());
        let features = (0..self.dim)
            .map(|j| {
                let z: f64 = self.rng.sample(StandardNormal);
                self.means[k][j] + z
            })
            .collect();
        Some(DataPoint::new(self.ord, features))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.points - self.ord) as usize;
        (left, Some(left))
    }
}

pub fn generate(cfg: &SyntheticConfig) -> Result<(Vec<DataPoint>, GroundTruth)> {
    let stream = SyntheticStream::new(cfg)?;
    let truth = stream.truth();
    Ok((stream.collect(), truth))
}
