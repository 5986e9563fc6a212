//! The leveled drift index.
//!
//! Raw points are only ever clustered at the finest granularity `g_0`.
//! Node `(g, i)` of a coarser level covers the finest nodes
//! `(i-1)*m + 1 ..= i*m` with `m = g / g_0`; in independent mode its summary
//! is the agglomeration of those children's CFs, in cumulative mode it is
//! the finest snapshot taken at the same boundary. Because every coarse
//! node is a pure function of finest nodes, a level can be stored at
//! ingestion time or rebuilt at query time with bitwise identical results,
//! which is what makes query answers independent of the materialization
//! policy.

mod policy;
mod snapshot;

use std::collections::BTreeMap;
use std::ops::Deref;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

pub use policy::{MaterializationPolicy, Mode, PolicyKind};
pub use snapshot::{SNAPSHOT_MAGIC, SNAPSHOT_VERSION};

use crate::detector::{dissimilarity, DriftSet, LevelDetector, LevelMeta, ThetaConfig};
use crate::error::{DriftError, Result};
use crate::stream::{DataPoint, GranularityChain};
use crate::summarizer::{
    agglomerate, cluster_points, decay, learn_epsilon, level_epsilon, Clustering, DecayConfig,
    EpsilonConfig,
};

/// One interval summary at one level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexNode {
    pub g: u64,
    pub i: u64,
    pub closing_ord: u64,
    pub summary: Clustering,
    /// Dissimilarity between the two halves of this node's own interval,
    /// used to calibrate the level's threshold.
    pub null_score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexConfig {
    pub chain: GranularityChain,
    pub policy: MaterializationPolicy,
    pub mode: Mode,
    pub epsilon: EpsilonConfig,
    /// Skip calibration and use this clustering radius.
    pub fixed_epsilon: Option<f64>,
    pub decay: DecayConfig,
    pub theta: ThetaConfig,
}

impl IndexConfig {
    pub fn new(chain: GranularityChain) -> Self {
        IndexConfig {
            chain,
            policy: MaterializationPolicy::full(),
            mode: Mode::Independent,
            epsilon: EpsilonConfig::default(),
            fixed_epsilon: None,
            decay: DecayConfig::default(),
            theta: ThetaConfig::default(),
        }
    }

    pub fn with_policy(mut self, policy: MaterializationPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_theta(mut self, theta: ThetaConfig) -> Self {
        self.theta = theta;
        self
    }

    pub fn with_fixed_epsilon(mut self, epsilon: f64) -> Self {
        self.fixed_epsilon = Some(epsilon);
        self
    }

    pub fn validate(&self) -> Result<Vec<bool>> {
        self.epsilon.validate()?;
        self.theta.validate()?;
        if let Some(eps) = self.fixed_epsilon {
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(DriftError::Config(format!(
                    "clustering radius must be positive, got {eps}"
                )));
            }
        }
        DecayConfig::new(self.decay.lambda)?;
        self.policy.resolve(&self.chain)
    }
}

/// Algorithm choices and learned parameters of a run, reported alongside
/// results so runs stay comparable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub clustering: String,
    pub decay_law: String,
    pub epsilon_rule: String,
    pub epsilon: Option<f64>,
    /// Agglomeration radius per level.
    pub level_epsilon: Vec<(u64, f64)>,
    pub theta: ThetaConfig,
    pub mode: Mode,
    pub policy: String,
}

/// Per-level storage counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelStorage {
    pub g: u64,
    pub materialized: bool,
    pub nodes: u64,
    pub cfs: u64,
    /// Cached derived nodes (only with `cache_derived`).
    pub cached_nodes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StorageReport {
    pub dim: usize,
    pub levels: Vec<LevelStorage>,
}

impl StorageReport {
    pub fn total_nodes(&self) -> u64 {
        self.levels.iter().map(|l| l.nodes).sum()
    }

    pub fn total_cfs(&self) -> u64 {
        self.levels.iter().map(|l| l.cfs).sum()
    }

    /// Stored floating-point values: one weight plus two `dim` vectors per CF.
    pub fn stored_floats(&self) -> u64 {
        self.total_cfs() * (1 + 2 * self.dim as u64)
    }
}

/// Nodes of one level, either borrowed from storage or freshly derived.
pub enum LevelView<'a> {
    Stored(&'a [IndexNode]),
    Derived(Vec<IndexNode>),
}

impl Deref for LevelView<'_> {
    type Target = [IndexNode];

    fn deref(&self) -> &[IndexNode] {
        match self {
            LevelView::Stored(nodes) => nodes,
            LevelView::Derived(nodes) => nodes,
        }
    }
}

#[derive(Debug, Default)]
struct AccessCounters {
    node_reads: BTreeMap<u64, u64>,
    derived_nodes: u64,
}

/// Multi-granularity index of clustering summaries.
#[derive(Debug, Serialize, Deserialize)]
pub struct DriftIndex {
    config: IndexConfig,
    materialized: Vec<bool>,
    dim: Option<usize>,
    ingested: u64,
    epsilon: Option<f64>,
    /// Points held back until the clustering radius is calibrated.
    pending: Vec<DataPoint>,
    /// Points of the currently open finest interval.
    buffer: Vec<DataPoint>,
    cumulative_state: Clustering,
    levels: Vec<Option<Vec<IndexNode>>>,
    detectors: Vec<Option<LevelDetector>>,
    #[serde(skip)]
    cache: Mutex<BTreeMap<u64, Vec<IndexNode>>>,
    #[serde(skip)]
    counters: Mutex<AccessCounters>,
}

impl Clone for DriftIndex {
    fn clone(&self) -> Self {
        DriftIndex {
            config: self.config.clone(),
            materialized: self.materialized.clone(),
            dim: self.dim,
            ingested: self.ingested,
            epsilon: self.epsilon,
            pending: self.pending.clone(),
            buffer: self.buffer.clone(),
            cumulative_state: self.cumulative_state.clone(),
            levels: self.levels.clone(),
            detectors: self.detectors.clone(),
            cache: Mutex::new(self.cache.lock().expect("cache lock").clone()),
            counters: Mutex::default(),
        }
    }
}

impl PartialEq for DriftIndex {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config
            && self.dim == other.dim
            && self.ingested == other.ingested
            && self.epsilon.map(f64::to_bits) == other.epsilon.map(f64::to_bits)
            && self.pending == other.pending
            && self.buffer == other.buffer
            && self.cumulative_state == other.cumulative_state
            && self.levels == other.levels
            && self.detectors == other.detectors
    }
}

impl DriftIndex {
    pub fn new(config: IndexConfig) -> Result<Self> {
        let materialized = config.validate()?;
        let levels = materialized.iter().map(|&m| m.then(Vec::new)).collect();
        let detectors = config
            .chain
            .levels()
            .iter()
            .zip(&materialized)
            .map(|(&g, &m)| m.then(|| LevelDetector::new(g, &config.theta)))
            .collect();
        Ok(DriftIndex {
            epsilon: config.fixed_epsilon,
            config,
            materialized,
            dim: None,
            ingested: 0,
            pending: Vec::new(),
            buffer: Vec::new(),
            cumulative_state: Clustering::default(),
            levels,
            detectors,
            cache: Mutex::default(),
            counters: Mutex::default(),
        })
    }

    pub fn config(&self) -> &IndexConfig {
        &self.config
    }

    pub fn chain(&self) -> &GranularityChain {
        &self.config.chain
    }

    pub fn mode(&self) -> Mode {
        self.config.mode
    }

    pub fn ingested_count(&self) -> u64 {
        self.ingested
    }

    pub fn dim(&self) -> Option<usize> {
        self.dim
    }

    pub fn epsilon(&self) -> Option<f64> {
        self.epsilon
    }

    pub fn is_materialized(&self, g: u64) -> Result<bool> {
        Ok(self.materialized[self.config.chain.require(g)?])
    }

    /// Number of closed finest intervals.
    pub fn finest_count(&self) -> u64 {
        self.finest().len() as u64
    }

    fn finest(&self) -> &[IndexNode] {
        self.levels[0]
            .as_deref()
            .expect("finest level is always stored")
    }

    /// Appends one point. Returns every node closed by this call.
    pub fn ingest(&mut self, p: DataPoint) -> Result<Vec<IndexNode>> {
        let expected = self.ingested + 1;
        if p.ord != expected {
            return Err(DriftError::OrdinalGap {
                expected,
                actual: p.ord,
            });
        }
        if p.dim() == 0 {
            return Err(DriftError::Data("point has no features".into()));
        }
        match self.dim {
            Some(d) if d != p.dim() => {
                return Err(DriftError::DimensionMismatch {
                    expected: d,
                    actual: p.dim(),
                })
            }
            Some(_) => {}
            None => {
                self.dim = Some(p.dim());
                self.cumulative_state = Clustering::empty(p.dim());
            }
        }
        self.ingested += 1;

        if self.epsilon.is_some() {
            return self.process(p);
        }
        self.pending.push(p);
        if self.pending.len() >= self.config.epsilon.sample_size {
            return self.calibrate();
        }
        Ok(Vec::new())
    }

    pub fn ingest_all<I>(&mut self, points: I) -> Result<Vec<IndexNode>>
    where
        I: IntoIterator<Item = DataPoint>,
    {
        let mut created = Vec::new();
        for p in points {
            created.extend(self.ingest(p)?);
        }
        created.extend(self.finish()?);
        Ok(created)
    }

    /// Ends the stream: if the stream was shorter than the calibration
    /// sample, learns the clustering radius from what arrived.
    pub fn finish(&mut self) -> Result<Vec<IndexNode>> {
        if self.epsilon.is_some() || self.pending.is_empty() {
            return Ok(Vec::new());
        }
        self.calibrate()
    }

    fn calibrate(&mut self) -> Result<Vec<IndexNode>> {
        let eps = learn_epsilon(&self.pending, &self.config.epsilon)?;
        self.epsilon = Some(eps);
        let pending = std::mem::take(&mut self.pending);
        let mut created = Vec::new();
        for p in pending {
            created.extend(self.process(p)?);
        }
        Ok(created)
    }

    fn process(&mut self, p: DataPoint) -> Result<Vec<IndexNode>> {
        self.buffer.push(p);
        let g0 = self.config.chain.finest();
        if (self.buffer.len() as u64) < g0 {
            return Ok(Vec::new());
        }
        let eps = self.epsilon.expect("radius calibrated before processing");
        let buffer = std::mem::take(&mut self.buffer);
        let half = buffer.len() / 2;
        let (summary, null_score) = match self.config.mode {
            Mode::Independent => {
                let summary = cluster_points(&buffer, eps)?;
                let null = if half > 0 {
                    let left = cluster_points(&buffer[..half], eps)?;
                    let right = cluster_points(&buffer[half..], eps)?;
                    dissimilarity(&left, &right).ok()
                } else {
                    None
                };
                (summary, null)
            }
            Mode::Cumulative => {
                let mut state = decay(&self.cumulative_state, &self.config.decay);
                for q in &buffer[..half] {
                    state.leader_insert(&q.features, eps)?;
                }
                let mid = (half > 0).then(|| state.clone());
                for q in &buffer[half..] {
                    state.leader_insert(&q.features, eps)?;
                }
                let null = mid.and_then(|mid| dissimilarity(&mid, &state).ok());
                self.cumulative_state = state.clone();
                (state, null)
            }
        };
        let i = self.finest_count() + 1;
        let node = IndexNode {
            g: g0,
            i,
            closing_ord: i * g0,
            summary,
            null_score,
        };
        let mut created = vec![node.clone()];
        if let Some(det) = self.detectors[0].as_mut() {
            det.observe(&node);
        }
        self.levels[0]
            .as_mut()
            .expect("finest level is always stored")
            .push(node);

        for j in 1..self.config.chain.len() {
            let m = self.config.chain.levels()[j] / g0;
            if !i.is_multiple_of(m) || !self.materialized[j] {
                continue;
            }
            let coarse = self.build_node(j, i / m, self.finest());
            if let Some(det) = self.detectors[j].as_mut() {
                det.observe(&coarse);
            }
            self.levels[j]
                .as_mut()
                .expect("materialized level")
                .push(coarse.clone());
            created.push(coarse);
        }
        Ok(created)
    }

    /// Builds node `i` of chain level `j` from the finest nodes.
    fn build_node(&self, j: usize, i: u64, finest: &[IndexNode]) -> IndexNode {
        let g0 = self.config.chain.finest();
        let g = self.config.chain.levels()[j];
        if j == 0 {
            return finest[(i - 1) as usize].clone();
        }
        let m = (g / g0) as usize;
        let first = (i as usize - 1) * m;
        let children = &finest[first..first + m];
        let half = m / 2;
        let (summary, null_score) = match self.config.mode {
            Mode::Independent => {
                let eps = self.level_epsilon(g);
                let gather = |nodes: &[IndexNode]| -> Vec<_> {
                    nodes
                        .iter()
                        .flat_map(|n| n.summary.cfs.iter().cloned())
                        .collect()
                };
                let summary = agglomerate(gather(children), eps);
                let left = agglomerate(gather(&children[..half]), eps);
                let right = agglomerate(gather(&children[half..]), eps);
                (summary, dissimilarity(&left, &right).ok())
            }
            Mode::Cumulative => {
                let last = &children[m - 1].summary;
                let mid = &children[half - 1].summary;
                (last.clone(), dissimilarity(mid, last).ok())
            }
        };
        IndexNode {
            g,
            i,
            closing_ord: g * i,
            summary,
            null_score,
        }
    }

    /// Agglomeration radius used at granularity `g`.
    pub fn level_epsilon(&self, g: u64) -> f64 {
        let eps = self.epsilon.unwrap_or(0.0);
        level_epsilon(eps, g, self.config.chain.finest(), self.dim.unwrap_or(0))
    }

    /// Nodes of level `g`: the stored sequence when materialized, otherwise
    /// derived from the finest level (and cached when the policy says so).
    pub fn derive_level(&self, g: u64) -> Result<LevelView<'_>> {
        let j = self.config.chain.require(g)?;
        if let Some(stored) = &self.levels[j] {
            self.count_reads(g, stored.len() as u64, 0);
            return Ok(LevelView::Stored(stored));
        }
        let g0 = self.config.chain.finest();
        let finest = self.finest();
        let complete = finest.len() as u64 / (g / g0);
        if self.config.policy.cache_derived {
            let mut cache = self.cache.lock().expect("cache lock");
            let cached = cache.entry(g).or_default();
            let have = cached.len() as u64;
            for i in have + 1..=complete {
                cached.push(self.build_node(j, i, finest));
            }
            let built = complete - have;
            self.count_reads(g0, built * (g / g0), built);
            return Ok(LevelView::Derived(cached.clone()));
        }
        let nodes: Vec<IndexNode> = (1..=complete)
            .map(|i| self.build_node(j, i, finest))
            .collect();
        self.count_reads(g0, complete * (g / g0), complete);
        Ok(LevelView::Derived(nodes))
    }

    fn count_reads(&self, g: u64, reads: u64, derived: u64) {
        let mut c = self.counters.lock().expect("counter lock");
        *c.node_reads.entry(g).or_default() += reads;
        c.derived_nodes += derived;
    }

    /// Node reads per level since the last reset, and the number of nodes
    /// derived on demand.
    pub fn access_counters(&self) -> (BTreeMap<u64, u64>, u64) {
        let c = self.counters.lock().expect("counter lock");
        (c.node_reads.clone(), c.derived_nodes)
    }

    pub fn reset_counters(&self) {
        *self.counters.lock().expect("counter lock") = AccessCounters::default();
    }

    /// Drifts detected online during ingestion (materialized levels only).
    pub fn live_drifts(&self, g: u64) -> Result<Option<DriftSet>> {
        let j = self.config.chain.require(g)?;
        Ok(self.detectors[j].as_ref().map(LevelDetector::drift_set))
    }

    pub fn live_meta(&self, g: u64) -> Result<Option<LevelMeta>> {
        let j = self.config.chain.require(g)?;
        Ok(self.detectors[j].as_ref().map(|d| d.meta()))
    }

    pub fn storage_report(&self) -> StorageReport {
        let cache = self.cache.lock().expect("cache lock");
        let levels = self
            .config
            .chain
            .levels()
            .iter()
            .zip(&self.levels)
            .map(|(&g, stored)| {
                let nodes = stored.as_deref().unwrap_or(&[]);
                LevelStorage {
                    g,
                    materialized: stored.is_some(),
                    nodes: nodes.len() as u64,
                    cfs: nodes.iter().map(|n| n.summary.len() as u64).sum(),
                    cached_nodes: cache.get(&g).map_or(0, |c| c.len() as u64),
                }
            })
            .collect();
        StorageReport {
            dim: self.dim.unwrap_or(0),
            levels,
        }
    }

    pub fn metadata(&self) -> RunMetadata {
        RunMetadata {
            clustering: "sequential leader (nearest centroid within radius), greedy agglomeration for coarse levels".into(),
            decay_law: format!(
                "exponential, factor 2^-{} per finest interval",
                self.config.decay.lambda
            ),
            epsilon_rule: match self.config.fixed_epsilon {
                Some(_) => "fixed".into(),
                None => format!(
                    "{} x mean pairwise distance over first {} points; level radius scaled by (g/g0)^(1/d)",
                    self.config.epsilon.alpha, self.config.epsilon.sample_size
                ),
            },
            epsilon: self.epsilon,
            level_epsilon: self
                .config
                .chain
                .levels()
                .iter()
                .map(|&g| (g, self.level_epsilon(g)))
                .collect(),
            theta: self.config.theta,
            mode: self.config.mode,
            policy: self.config.policy.to_string(),
        }
    }
}
