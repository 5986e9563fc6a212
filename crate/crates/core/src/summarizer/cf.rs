use serde::{Deserialize, Serialize};

use crate::error::{DriftError, Result};

/// Additive micro-cluster summary: weight, per-dimension linear sum and
/// per-dimension squared sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterFeature {
    pub n: f64,
    pub ls: Vec<f64>,
    pub ss: Vec<f64>,
}

impl ClusterFeature {
    /// Zero-weight summary; the identity of [`ClusterFeature::merge`].
    pub fn empty(dim: usize) -> Self {
        ClusterFeature {
            n: 0.0,
            ls: vec![0.0; dim],
            ss: vec![0.0; dim],
        }
    }

    pub fn from_point(x: &[f64]) -> Self {
        ClusterFeature {
            n: 1.0,
            ls: x.to_vec(),
            ss: x.iter().map(|v| v * v).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.ls.len()
    }

    fn check_dim(&self, actual: usize) -> Result<()> {
        if self.dim() != actual {
            return Err(DriftError::DimensionMismatch {
                expected: self.dim(),
                actual,
            });
        }
        Ok(())
    }

    /// Absorbs one point.
    pub fn add(&mut self, x: &[f64]) -> Result<()> {
        self.check_dim(x.len())?;
        self.n += 1.0;
        for ((l, s), v) in self.ls.iter_mut().zip(self.ss.iter_mut()).zip(x) {
            *l += v;
            *s += v * v;
        }
        Ok(())
    }

    pub fn merge(&self, other: &ClusterFeature) -> Result<ClusterFeature> {
        let mut out = self.clone();
        out.absorb(other)?;
        Ok(out)
    }

    pub fn absorb(&mut self, other: &ClusterFeature) -> Result<()> {
        self.check_dim(other.dim())?;
        self.n += other.n;
        for (a, b) in self.ls.iter_mut().zip(&other.ls) {
            *a += b;
        }
        for (a, b) in self.ss.iter_mut().zip(&other.ss) {
            *a += b;
        }
        Ok(())
    }

    pub fn scale(&mut self, factor: f64) {
        self.n *= factor;
        self.ls.iter_mut().for_each(|v| *v *= factor);
        self.ss.iter_mut().for_each(|v| *v *= factor);
    }

    pub fn centroid(&self) -> Vec<f64> {
        self.ls.iter().map(|v| v / self.n).collect()
    }

    /// Per-dimension population variance.
    pub fn variance(&self) -> Vec<f64> {
        self.ls
            .iter()
            .zip(&self.ss)
            .map(|(l, s)| {
                let mean = l / self.n;
                s / self.n - mean * mean
            })
            .collect()
    }

    /// Euclidean distance between this summary's centroid and `x`.
    pub(crate) fn distance_to(&self, x: &[f64]) -> f64 {
        self.ls
            .iter()
            .zip(x)
            .map(|(l, v)| {
                let diff = l / self.n - v;
                diff * diff
            })
            .sum::<f64>()
            .sqrt()
    }

    pub(crate) fn centroid_distance(&self, other: &ClusterFeature) -> f64 {
        self.ls
            .iter()
            .zip(&other.ls)
            .map(|(a, b)| {
                let diff = a / self.n - b / other.n;
                diff * diff
            })
            .sum::<f64>()
            .sqrt()
    }
}

/// `cf` with `x` absorbed.
pub fn cf_add(cf: &ClusterFeature, x: &[f64]) -> Result<ClusterFeature> {
    let mut out = cf.clone();
    out.add(x)?;
    Ok(out)
}

pub fn cf_merge(a: &ClusterFeature, b: &ClusterFeature) -> Result<ClusterFeature> {
    a.merge(b)
}
