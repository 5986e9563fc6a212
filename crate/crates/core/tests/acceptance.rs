//! Acceptance gate. Runs every criterion in sequence, prints one line per
//! criterion and exits non-zero if any required criterion fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use driftdex::detector::{detect_over_scores, Drift, DriftSet, ThetaEstimator, ThetaMethod};
use driftdex::harness::eval::score_detection;
use driftdex::harness::synth::{generate, DriftSchedule, SyntheticConfig};
use driftdex::index::{DriftIndex, IndexConfig, MaterializationPolicy, Mode};
use driftdex::query::{
    reference_eval, refine, run_query, synthesize, uq, DriftSets, QueryOptions, QueryResult,
    QuerySpec,
};
use driftdex::stream::{DataPoint, GranularityChain};
use driftdex::summarizer::{
    cf_merge, cluster_points, cumulative_update, ClusterFeature, Clustering, DecayConfig,
};
use driftdex::ThetaConfig;

struct Outcome {
    pass: bool,
    detail: String,
    /// Informational criteria are reported but do not fail the gate.
    informational: bool,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome {
            pass,
            detail: detail.into(),
            informational: false,
        }
    }
}

fn build(cfg: IndexConfig, points: &[DataPoint]) -> DriftIndex {
    let mut idx = DriftIndex::new(cfg).unwrap();
    idx.ingest_all(points.iter().cloned()).unwrap();
    idx
}

fn chain(levels: &[u64]) -> GranularityChain {
    GranularityChain::new(levels.to_vec()).unwrap()
}

fn sudden_drift_recovery() -> Outcome {
    let start = Instant::now();
    let cfg = SyntheticConfig::periodic(5, 20_000, 1000, 5.0, 1);
    let (points, truth) = generate(&cfg).unwrap();
    let idx = build(
        IndexConfig::new(chain(&[100, 500, 1000]))
            .with_mode(Mode::Independent)
            .with_theta(ThetaConfig {
                method: ThetaMethod::MeanKSigma { k: 2.0 },
                ..ThetaConfig::default()
            }),
        &points,
    );
    let set = uq(&idx, 1000).unwrap();
    let score = score_detection(&set, &truth, 1000);
    let secs = start.elapsed().as_secs_f64();
    Outcome::new(
        score.precision >= 0.9 && score.recall >= 0.9 && secs < 10.0,
        format!(
            "truths={} detected={} precision={:.3} recall={:.3} runtime={:.2}s",
            truth.len(),
            set.len(),
            score.precision,
            score.recall,
            secs
        ),
    )
}

fn granularity_tradeoff() -> Outcome {
    let seeds = [1u64, 2, 3, 4, 5];
    let (mut p_fine, mut r_fine, mut p_coarse, mut r_coarse) = (0.0, 0.0, 0.0, 0.0);
    for &seed in &seeds {
        let cfg = SyntheticConfig::periodic(5, 20_000, 300, 3.0, seed);
        let (points, truth) = generate(&cfg).unwrap();
        let idx = build(IndexConfig::new(chain(&[100, 500, 1000])), &points);
        let fine = score_detection(&uq(&idx, 100).unwrap(), &truth, 100);
        let coarse = score_detection(&uq(&idx, 1000).unwrap(), &truth, 1000);
        p_fine += fine.precision;
        r_fine += fine.recall;
        p_coarse += coarse.precision;
        r_coarse += coarse.recall;
    }
    let n = seeds.len() as f64;
    let (p_fine, r_fine, p_coarse, r_coarse) = (p_fine / n, r_fine / n, p_coarse / n, r_coarse / n);
    Outcome::new(
        r_fine >= r_coarse && p_coarse >= p_fine,
        format!(
            "g=100 precision={p_fine:.3} recall={r_fine:.3}; g=1000 precision={p_coarse:.3} recall={r_coarse:.3}"
        ),
    )
}

fn random_chain(rng: &mut ChaCha8Rng, max_len: usize) -> Vec<u64> {
    let len = rng.random_range(2..=max_len);
    let mut levels = vec![*[10u64, 20, 25, 50].choose(rng).unwrap()];
    while levels.len() < len {
        let m = rng.random_range(2..=4);
        levels.push(levels.last().unwrap() * m);
    }
    levels
}

/// Serialized UQ answers for every level plus every RQ and SQ pair.
fn answer_json(idx: &DriftIndex) -> Vec<String> {
    let levels = idx.chain().levels().to_vec();
    let mut out = Vec::new();
    for &g in &levels {
        out.push(serde_json::to_string(&uq(idx, g).unwrap()).unwrap());
    }
    for &a in &levels {
        for &b in &levels {
            if a == b {
                continue;
            }
            for window_containment in [false, true] {
                let opts = QueryOptions { window_containment };
                let spec = if a > b {
                    QuerySpec::Refinement { g_s: a, g_t: b }
                } else {
                    QuerySpec::Synthesis { g_s: a, g_t: b }
                };
                out.push(run_query(idx, spec, opts).unwrap().to_json());
            }
        }
    }
    out
}

fn materialization_invariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let mut mismatches = 0;
    let mut compared = 0;
    let mut drifts = 0;
    for c in 0..10 {
        let levels = random_chain(&mut rng, 4);
        let mode = if c % 2 == 0 {
            Mode::Independent
        } else {
            Mode::Cumulative
        };
        let top = *levels.last().unwrap();
        let n = top * rng.random_range(6..=12) + rng.random_range(0..top);
        let period = levels[0] * rng.random_range(2..=6);
        let cfg = SyntheticConfig {
            dim: rng.random_range(1..=4),
            points: n,
            schedule: DriftSchedule::Periodic(period),
            magnitude: rng.random_range(2.0..6.0),
            components: rng.random_range(1..=4),
            seed: rng.random(),
        };
        let (points, _) = generate(&cfg).unwrap();
        let mut partial = vec![levels[0]];
        partial.extend(levels[1..].iter().copied().filter(|_| rng.random_bool(0.5)));
        let policies = [
            MaterializationPolicy::full(),
            MaterializationPolicy::bottom_only(),
            MaterializationPolicy::partial(partial),
        ];
        let indexes: Vec<DriftIndex> = policies
            .iter()
            .map(|p| {
                let cfg = IndexConfig::new(chain(&levels))
                    .with_mode(mode)
                    .with_policy(p.clone());
                build(cfg, &points)
            })
            .collect();
        let answers: Vec<Vec<String>> = indexes.iter().map(answer_json).collect();
        drifts += levels
            .iter()
            .map(|&g| uq(&indexes[0], g).unwrap().len())
            .sum::<usize>();
        for other in &answers[1..] {
            compared += other.len();
            mismatches += other
                .iter()
                .zip(&answers[0])
                .filter(|(a, b)| a != b)
                .count();
        }
    }
    Outcome::new(
        mismatches == 0 && drifts > 0,
        format!("10 configurations, {compared} answers compared, {drifts} drifts, {mismatches} mismatches"),
    )
}

fn random_sets(rng: &mut ChaCha8Rng) -> DriftSets {
    let len = rng.random_range(1..=4);
    let mut levels = vec![rng.random_range(1..=5u64)];
    while levels.len() < len {
        let m = rng.random_range(2..=4);
        levels.push(levels.last().unwrap() * m);
    }
    let top = *levels.last().unwrap();
    let total = top * rng.random_range(3..=12);
    let mut sets = BTreeMap::new();
    for &g in &levels {
        let pairs = total / g - 1;
        let want = rng.random_range(0..=40).min(pairs as usize);
        let mut idx: Vec<u64> = (1..=pairs)
            .collect::<Vec<_>>()
            .choose_multiple(rng, want)
            .copied()
            .collect();
        idx.sort_unstable();
        let drifts = idx
            .into_iter()
            .map(|i| Drift::new(g, i, 1.0, 0.5))
            .collect();
        sets.insert(g, DriftSet { g, drifts });
    }
    sets
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let mut instances = 0;
    let mut queries = 0;
    let mut mismatches = 0;
    while instances < 300 {
        let sets = random_sets(&mut rng);
        let levels: Vec<u64> = sets.keys().copied().collect();
        if levels.len() < 2 {
            continue;
        }
        instances += 1;
        for &a in &levels {
            for &b in &levels {
                for window_containment in [false, true] {
                    let opts = QueryOptions { window_containment };
                    let (fast, spec): (Option<QueryResult>, QuerySpec) = if a > b {
                        let spec = QuerySpec::Refinement { g_s: a, g_t: b };
                        (refine(&sets, a, b, opts).ok(), spec)
                    } else if a < b {
                        let spec = QuerySpec::Synthesis { g_s: a, g_t: b };
                        (synthesize(&sets, a, b, opts).ok(), spec)
                    } else {
                        continue;
                    };
                    let slow = reference_eval(&sets, spec, opts).ok();
                    queries += 1;
                    if fast.is_none() || fast != slow {
                        mismatches += 1;
                    }
                }
            }
        }
    }
    Outcome::new(
        mismatches == 0 && instances >= 100,
        format!("{instances} instances, {queries} queries, {mismatches} mismatches"),
    )
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

fn cf_close(a: &ClusterFeature, b: &ClusterFeature) -> bool {
    close(a.n, b.n, 1e-9)
        && a.ls.iter().zip(&b.ls).all(|(x, y)| close(*x, *y, 1e-9))
        && a.ss.iter().zip(&b.ss).all(|(x, y)| close(*x, *y, 1e-9))
}

fn cf_strategy(dim: usize) -> impl Strategy<Value = ClusterFeature> {
    prop::collection::vec(prop::collection::vec(-100.0f64..100.0, dim), 1..8).prop_map(|pts| {
        let mut cf = ClusterFeature::from_point(&pts[0]);
        for p in &pts[1..] {
            cf.add(p).unwrap();
        }
        cf
    })
}

fn cf_algebra() -> Outcome {
    let mut runner = TestRunner::new(Config {
        cases: 1000,
        failure_persistence: None,
        ..Config::default()
    });
    let strategy = (1usize..6).prop_flat_map(|d| {
        (
            cf_strategy(d),
            cf_strategy(d),
            cf_strategy(d),
            prop::collection::vec(prop::collection::vec(-50.0f64..50.0, d), 1..60),
            0.01f64..40.0,
        )
    });
    let result = runner.run(&strategy, |(a, b, c, pts, eps)| {
        let ab = cf_merge(&a, &b).unwrap();
        let ba = cf_merge(&b, &a).unwrap();
        prop_assert!(cf_close(&ab, &ba));
        let left = cf_merge(&ab, &c).unwrap();
        let right = cf_merge(&a, &cf_merge(&b, &c).unwrap()).unwrap();
        prop_assert!(cf_close(&left, &right));

        let points: Vec<DataPoint> = pts
            .iter()
            .enumerate()
            .map(|(k, x)| DataPoint::new(k as u64 + 1, x.clone()))
            .collect();
        let clustering = cluster_points(&points, eps).unwrap();
        let total = clustering.collapse();
        prop_assert!(close(total.n, points.len() as f64, 1e-9));
        for j in 0..pts[0].len() {
            let ls: f64 = pts.iter().map(|x| x[j]).sum();
            let ss: f64 = pts.iter().map(|x| x[j] * x[j]).sum();
            prop_assert!(close(total.ls[j], ls, 1e-9));
            prop_assert!(close(total.ss[j], ss, 1e-9));
        }
        Ok(())
    });
    Outcome::new(
        result.is_ok(),
        match result {
            Ok(()) => "1000 cases: commutativity, associativity, mass conservation".to_string(),
            Err(e) => format!("counterexample: {e}"),
        },
    )
}

fn decay_law() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    let mut worst = 0.0f64;
    let mut cases = 0;
    for _ in 0..200 {
        let k = rng.random_range(1..=50usize);
        let w = rng.random_range(1..=30usize);
        let lambda = rng.random_range(0.0..2.0);
        let decay = DecayConfig::new(lambda).unwrap();
        let dim = rng.random_range(1..=3);
        let mut state = Clustering::empty(dim);
        for _ in 0..k {
            let pts: Vec<DataPoint> = (0..w)
                .map(|_| DataPoint::new(0, (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()))
                .collect();
            state = cumulative_update(&state, &pts, 5.0, &decay).unwrap();
        }
        let delta = decay.factor();
        let expected: f64 = (0..k).map(|j| w as f64 * delta.powi(j as i32)).sum();
        worst = worst.max((state.total_weight() - expected).abs());
        cases += 1;
    }
    Outcome::new(
        worst <= 1e-9,
        format!("{cases} cases, max abs error {worst:.2e}"),
    )
}

fn theta_monotonicity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut violations = 0;
    let mut counts = Vec::new();
    for _ in 0..20 {
        let scores: Vec<f64> = (0..50)
            .map(|_| {
                let base: f64 = rng.random_range(0.0..1.0);
                if rng.random_bool(0.15) {
                    base + rng.random_range(1.0..5.0)
                } else {
                    base
                }
            })
            .collect();
        let sizes: Vec<usize> = [1.0, 2.0, 3.0]
            .iter()
            .map(|&k| {
                let est = ThetaEstimator::new(ThetaMethod::MeanKSigma { k }, 20);
                detect_over_scores(1, &scores, &est).len()
            })
            .collect();
        if sizes.windows(2).any(|w| w[1] > w[0]) {
            violations += 1;
        }
        counts.push(sizes);
    }
    let mean = |j: usize| counts.iter().map(|c| c[j]).sum::<usize>() as f64 / counts.len() as f64;
    Outcome::new(
        violations == 0,
        format!(
            "20 sequences, mean |X| for k=1,2,3: {:.1}, {:.1}, {:.1}; {violations} violations",
            mean(0),
            mean(1),
            mean(2)
        ),
    )
}

fn throughput() -> Outcome {
    let cfg = SyntheticConfig::periodic(10, 1_000_000, 10_000, 5.0, 8);
    let (points, _) = generate(&cfg).unwrap();
    let mut idx = DriftIndex::new(
        IndexConfig::new(chain(&[100, 500, 1000])).with_policy(MaterializationPolicy::full()),
    )
    .unwrap();
    let start = Instant::now();
    idx.ingest_all(points).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let nodes = idx.storage_report().total_nodes();
    let profile = if cfg!(debug_assertions) {
        "debug"
    } else {
        "release"
    };
    Outcome {
        pass: secs <= 60.0 && nodes == 10_000 + 2_000 + 1_000,
        detail: format!("1,000,000 points d=10 in {secs:.2}s ({profile} build), {nodes} nodes"),
        informational: true,
    }
}

fn run_cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_driftdex"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn check_schema(json: &str, kind: &str) -> Result<(), String> {
    let value: serde_json::Value = serde_json::from_str(json).map_err(|e| e.to_string())?;
    let obj = value.as_object().ok_or("not an object")?;
    if obj.get("kind").and_then(|k| k.as_str()) != Some(kind) {
        return Err(format!("kind is not {kind}"));
    }
    let drift_ok = |d: &serde_json::Value| {
        let o = d.as_object();
        o.is_some_and(|o| {
            o.len() == 5
                && ["g", "i", "boundary_ord"].iter().all(|k| o[*k].is_u64())
                && ["score", "theta"].iter().all(|k| o[*k].is_f64())
        })
    };
    let list_ok = |key: &str, check: &dyn Fn(&serde_json::Value) -> bool| {
        obj.get(key)
            .and_then(|v| v.as_array())
            .is_some_and(|a| a.iter().all(check))
    };
    let ok = match kind {
        "UQ" => obj["g"].is_u64() && list_ok("drifts", &drift_ok),
        _ => {
            obj["g_s"].is_u64()
                && obj["g_t"].is_u64()
                && list_ok("pairs", &|p| {
                    drift_ok(&p["source"]) && drift_ok(&p["match"])
                })
                && list_ok("unmatched", &drift_ok)
        }
    };
    // the typed model rejects unknown fields
    serde_json::from_str::<QueryResult>(json).map_err(|e| e.to_string())?;
    if ok {
        Ok(())
    } else {
        Err(format!("{kind} result does not match the schema"))
    }
}

fn cli_round_trip() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let (stream, truth, index, copy) = (
        p("stream.csv"),
        p("truth.json"),
        p("idx.bin"),
        p("copy.bin"),
    );

    let gen = run_cli(&[
        "gen",
        "--dim",
        "4",
        "--points",
        "6000",
        "--period",
        "1000",
        "--magnitude",
        "5",
        "--seed",
        "9",
        "--out",
        &stream,
        "--truth-out",
        &truth,
    ]);
    if !gen.status.success() {
        return Outcome::new(
            false,
            format!("gen failed: {}", String::from_utf8_lossy(&gen.stderr)),
        );
    }
    let ingest = run_cli(&[
        "ingest",
        "--input",
        &stream,
        "--granularities",
        "100,500,1000",
        "--mode",
        "independent",
        "--policy",
        "partial:100,1000",
        "--theta",
        "mean_k_sigma:2",
        "--index-out",
        &index,
    ]);
    if !ingest.status.success() {
        return Outcome::new(
            false,
            format!("ingest failed: {}", String::from_utf8_lossy(&ingest.stderr)),
        );
    }

    // export then import through the library and write the copy back out
    let loaded = DriftIndex::load(Path::new(&index)).unwrap();
    loaded.save(Path::new(&copy)).unwrap();
    let same_bytes = std::fs::read(&index).unwrap() == std::fs::read(&copy).unwrap();

    let queries: [(&str, Vec<&str>); 3] = [
        ("UQ", vec!["uq", "--g", "1000"]),
        ("RQ", vec!["rq", "--gs", "1000", "--gt", "100"]),
        ("SQ", vec!["sq", "--gs", "100", "--gt", "1000"]),
    ];
    let mut problems = Vec::new();
    let mut answers = 0;
    for (kind, q) in &queries {
        let mut outputs = Vec::new();
        for file in [&index, &copy] {
            let mut args = vec!["query"];
            args.extend(q.iter().copied());
            args.extend(["--index", file.as_str()]);
            let out = run_cli(&args);
            if !out.status.success() {
                problems.push(format!("{kind} exit {:?}", out.status.code()));
                continue;
            }
            let text = String::from_utf8(out.stdout).unwrap();
            if let Err(e) = check_schema(text.trim(), kind) {
                problems.push(e);
            }
            outputs.push(text);
        }
        if outputs.len() == 2 && outputs[0] != outputs[1] {
            problems.push(format!("{kind} differs after re-import"));
        }
        answers += outputs.len();
    }
    let bad = run_cli(&["query", "uq", "--index", &index, "--g", "300"]);
    if bad.status.code() != Some(1) {
        problems.push(format!("unknown granularity exit {:?}", bad.status.code()));
    }
    Outcome::new(
        problems.is_empty() && same_bytes,
        if problems.is_empty() {
            format!("{answers} query outputs schema-valid, re-import identical, snapshot bytes equal: {same_bytes}")
        } else {
            problems.join("; ")
        },
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        ("sudden drift recovery at g=1000", sudden_drift_recovery),
        ("granularity tradeoff direction", granularity_tradeoff),
        ("materialization invariance", materialization_invariance),
        ("traversal equals reference evaluation", oracle_equivalence),
        ("cluster feature algebra", cf_algebra),
        ("cumulative decay law", decay_law),
        ("threshold monotonicity in k", theta_monotonicity),
        ("throughput smoke test", throughput),
        ("CLI round trip", cli_round_trip),
    ];
    let mut failed = 0;
    for (n, (name, run)) in criteria.iter().enumerate() {
        let outcome = run();
        let verdict = match (outcome.pass, outcome.informational) {
            (true, _) => "PASS",
            (false, true) => "FAIL (informational)",
            (false, false) => "FAIL",
        };
        println!("criterion {}: {verdict}: {name}: {}", n + 1, outcome.detail);
        if !outcome.pass && !outcome.informational {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("acceptance: {failed} criteria failed");
        std::process::exit(1);
    }
    println!("acceptance: all criteria passed");
}
