//! Benchmark grid: dataset × chain × mode × policy × threshold.
//!
//! Cells run one after another so that wall-clock timings are not
//! disturbed by sibling cells.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::csv_input::{ingest_csv, CsvOptions};
use super::eval::{score_detection, LevelScore};
use super::synth::{generate, GroundTruth, SyntheticConfig};
use crate::detector::{Calibration, Drift, LevelMeta, ThetaConfig, ThetaMethod};
use crate::error::{DriftError, Result};
use crate::index::{
    DriftIndex, IndexConfig, MaterializationPolicy, Mode, RunMetadata, StorageReport,
};
use crate::query::{run_query, uq_with_meta, QueryOptions, QueryResult, QuerySpec};
use crate::stream::{DataPoint, GranularityChain};
use crate::summarizer::{DecayConfig, EpsilonConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvSource {
    pub path: PathBuf,
    #[serde(flatten)]
    pub options: CsvOptions,
    /// Ground-truth JSON file (`{"drifts": [...]}`).
    #[serde(default)]
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub name: String,
    #[serde(default)]
    pub synthetic: Option<SyntheticConfig>,
    #[serde(default)]
    pub csv: Option<CsvSource>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QueryEntry {
    Rq { gs: u64, gt: u64 },
    Sq { gs: u64, gt: u64 },
}

impl QueryEntry {
    fn spec(self) -> QuerySpec {
        match self {
            QueryEntry::Rq { gs, gt } => QuerySpec::Refinement { g_s: gs, g_t: gt },
            QueryEntry::Sq { gs, gt } => QuerySpec::Synthesis { g_s: gs, g_t: gt },
        }
    }
}

fn default_window() -> usize {
    20
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub chains: Vec<Vec<u64>>,
    pub modes: Vec<Mode>,
    /// Policy strings: `full`, `bottom`, `partial:G1,G2`.
    pub policies: Vec<String>,
    /// Threshold strings: `mean_k_sigma:K`, `quantile:Q`.
    pub thetas: Vec<String>,
    #[serde(default)]
    pub calibration: Calibration,
    #[serde(default = "default_window")]
    pub window: usize,
    /// Matching tolerance; defaults to each level's granularity.
    #[serde(default)]
    pub tau: Option<u64>,
    #[serde(default)]
    pub epsilon: Option<EpsilonConfig>,
    #[serde(default)]
    pub decay: Option<DecayConfig>,
    #[serde(default)]
    pub cache_derived: bool,
    #[serde(default)]
    pub queries: Vec<QueryEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSpec {
    pub datasets: Vec<DatasetSpec>,
    pub grid: GridSpec,
}

impl BenchSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| DriftError::Config(format!("bench spec: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| DriftError::io(format!("reading {}", path.display()), e))?;
        let mut spec = Self::from_toml(&text)?;
        // relative CSV paths are relative to the spec file
        if let Some(dir) = path.parent() {
            for ds in &mut spec.datasets {
                if let Some(csv) = &mut ds.csv {
                    if csv.path.is_relative() {
                        csv.path = dir.join(&csv.path);
                    }
                    if let Some(t) = &mut csv.truth {
                        if t.is_relative() {
                            *t = dir.join(&*t);
                        }
                    }
                }
            }
        }
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellId {
    pub dataset: String,
    pub chain: Vec<u64>,
    pub mode: Mode,
    pub policy: String,
    pub theta: String,
}

impl std::fmt::Display for CellId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}/{:?}/{}/{}/{}",
            self.dataset, self.chain, self.mode, self.policy, self.theta
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRun {
    pub g: u64,
    pub drifts: Vec<Drift>,
    pub meta: LevelMeta,
    pub latency_ms: f64,
    pub score: Option<LevelScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRun {
    pub result: QueryResult,
    pub latency_ms: f64,
}

/// Everything measured for one grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub cell: CellId,
    pub points: u64,
    pub truth: Option<GroundTruth>,
    pub ingest_ms: f64,
    pub levels: Vec<LevelRun>,
    pub queries: Vec<QueryRun>,
    pub storage: StorageReport,
    pub metadata: RunMetadata,
}

impl CellReport {
    /// Drift sets and query answers, without timings, storage or level
    /// metadata.
    pub fn answers(&self) -> Vec<Vec<Drift>> {
        let mut out: Vec<Vec<Drift>> = self.levels.iter().map(|l| l.drifts.clone()).collect();
        for q in &self.queries {
            let r = &q.result;
            out.push(r.drifts().to_vec());
            out.push(r.unmatched().to_vec());
            for p in r.pairs() {
                out.push(vec![p.source.clone(), p.matched.clone()]);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub cells: Vec<CellReport>,
}

/// Points and optional ground truth of one dataset.
pub fn load_dataset(ds: &DatasetSpec) -> Result<(Vec<DataPoint>, Option<GroundTruth>)> {
    match (&ds.synthetic, &ds.csv) {
        (Some(cfg), None) => {
            let (points, truth) = generate(cfg)?;
            Ok((points, Some(truth)))
        }
        (None, Some(src)) => {
            let (points, _) = ingest_csv(&src.path, &src.options)?;
            let truth = match &src.truth {
                Some(p) => Some(read_truth(p)?),
                None => None,
            };
            Ok((points, truth))
        }
        _ => Err(DriftError::Config(format!(
            "dataset {:?} needs exactly one of `synthetic` or `csv`",
            ds.name
        ))),
    }
}

pub fn read_truth(path: &Path) -> Result<GroundTruth> {
    let text = fs::read_to_string(path)
        .map_err(|e| DriftError::io(format!("reading {}", path.display()), e))?;
    let truth: GroundTruth = serde_json::from_str(&text)
        .map_err(|e| DriftError::Data(format!("{}: {e}", path.display())))?;
    Ok(GroundTruth::new(truth.drifts))
}

fn millis(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Runs the whole pipeline for one configuration.
pub fn run_cell(
    cell: CellId,
    config: IndexConfig,
    points: &[DataPoint],
    truth: Option<&GroundTruth>,
    tau: Option<u64>,
    queries: &[QueryEntry],
) -> Result<CellReport> {
    let mut index = DriftIndex::new(config)?;
    let start = Instant::now();
    index.ingest_all(points.iter().cloned())?;
    let ingest_ms = millis(start);

    let mut levels = Vec::new();
    for &g in index.chain().levels() {
        let start = Instant::now();
        let (set, meta) = uq_with_meta(&index, g)?;
        let latency_ms = millis(start);
        let score = truth.map(|t| score_detection(&set, t, tau.unwrap_or(g)));
        levels.push(LevelRun {
            g,
            drifts: set.drifts,
            meta,
            latency_ms,
            score,
        });
    }

    let mut runs = Vec::new();
    for q in queries {
        let start = Instant::now();
        let result = run_query(&index, q.spec(), QueryOptions::default())?;
        runs.push(QueryRun {
            result,
            latency_ms: millis(start),
        });
    }

    Ok(CellReport {
        cell,
        points: points.len() as u64,
        truth: truth.cloned(),
        ingest_ms,
        levels,
        queries: runs,
        storage: index.storage_report(),
        metadata: index.metadata(),
    })
}

pub fn run_bench(spec: &BenchSpec) -> Result<BenchReport> {
    let grid = &spec.grid;
    let mut cells = Vec::new();
    for ds in &spec.datasets {
        let (points, truth) = load_dataset(ds).map_err(|e| DriftError::Cell {
            cell: ds.name.clone(),
            source: Box::new(e),
        })?;
        for chain in &grid.chains {
            for &mode in &grid.modes {
                for policy in &grid.policies {
                    for theta in &grid.thetas {
                        let id = CellId {
                            dataset: ds.name.clone(),
                            chain: chain.clone(),
                            mode,
                            policy: policy.clone(),
                            theta: theta.clone(),
                        };
                        let annotate = |e: DriftError| DriftError::Cell {
                            cell: id.to_string(),
                            source: Box::new(e),
                        };
                        let config =
                            cell_config(grid, chain, mode, policy, theta).map_err(annotate)?;
                        let report = run_cell(
                            id.clone(),
                            config,
                            &points,
                            truth.as_ref(),
                            grid.tau,
                            &grid.queries,
                        )
                        .map_err(annotate)?;
                        cells.push(report);
                    }
                }
            }
        }
    }
    Ok(BenchReport { cells })
}

fn cell_config(
    grid: &GridSpec,
    chain: &[u64],
    mode: Mode,
    policy: &str,
    theta: &str,
) -> Result<IndexConfig> {
    let policy: MaterializationPolicy = policy.parse()?;
    let method: ThetaMethod = theta.parse()?;
    let mut cfg = IndexConfig::new(GranularityChain::new(chain.to_vec())?)
        .with_mode(mode)
        .with_policy(policy.with_cache(grid.cache_derived))
        .with_theta(ThetaConfig {
            method,
            window: grid.window,
            calibration: grid.calibration,
        });
    if let Some(eps) = grid.epsilon {
        cfg.epsilon = eps;
    }
    if let Some(decay) = grid.decay {
        cfg.decay = decay;
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SPEC: &str = r#"
[[datasets]]
name = "periodic"
[datasets.synthetic]
dim = 3
points = 6000
magnitude = 5.0
seed = 11
schedule = { periodic = 1000 }

[grid]
chains = [[100, 500, 1000]]
modes = ["independent"]
policies = ["full", "bottom", "partial:100,1000"]
thetas = ["mean_k_sigma:2"]
queries = [{ kind = "rq", gs = 1000, gt = 100 }, { kind = "sq", gs = 100, gt = 1000 }]
"#;

    #[test]
    fn policies_agree_on_answers() {
        let spec = BenchSpec::from_toml(SPEC).unwrap();
        let report = run_bench(&spec).unwrap();
        assert_eq!(report.cells.len(), 3);
        let first = report.cells[0].answers();
        for cell in &report.cells[1..] {
            assert_eq!(cell.answers(), first);
        }
        let full = &report.cells[0].storage;
        let bottom = &report.cells[1].storage;
        assert!(full.total_cfs() > bottom.total_cfs());
        let score = report.cells[0].levels[2].score.as_ref().unwrap();
        assert_eq!(score.tau, 1000);
    }

    #[test]
    fn single_cell_equals_manual_pipeline() {
        let spec = BenchSpec::from_toml(SPEC).unwrap();
        let cfg = spec.datasets[0].synthetic.clone().unwrap();
        let (points, _) = generate(&cfg).unwrap();
        let mut idx = DriftIndex::new(IndexConfig::new(
            GranularityChain::new(vec![100, 500, 1000]).unwrap(),
        ))
        .unwrap();
        idx.ingest_all(points).unwrap();
        let report = run_bench(&spec).unwrap();
        for (level, g) in report.cells[0].levels.iter().zip([100, 500, 1000]) {
            assert_eq!(level.drifts, crate::query::uq(&idx, g).unwrap().drifts);
        }
    }

    #[test]
    fn empty_dataset_reports_zeros() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("empty.csv"), "").unwrap();
        let spec = BenchSpec::from_toml(
            r#"
[[datasets]]
name = "empty"
csv = { path = "empty.csv" }

[grid]
chains = [[10, 20]]
modes = ["cumulative"]
policies = ["bottom"]
thetas = ["quantile:0.9"]
"#,
        )
        .unwrap();
        let path = dir.path().join("bench.toml");
        fs::write(&path, toml::to_string(&spec).unwrap()).unwrap();
        let spec = BenchSpec::load(&path).unwrap();
        let report = run_bench(&spec).unwrap();
        let cell = &report.cells[0];
        assert_eq!(cell.points, 0);
        assert_eq!(cell.storage.total_nodes(), 0);
        assert!(cell.levels.iter().all(|l| l.drifts.is_empty()));
    }

    #[test]
    fn bad_cell_is_annotated() {
        let mut spec = BenchSpec::from_toml(SPEC).unwrap();
        spec.grid.policies = vec!["partial:500".into()];
        let err = run_bench(&spec).unwrap_err();
        assert!(err.to_string().contains("periodic/[100, 500, 1000]"));
        assert!(!err.is_data_error());
    }
}
