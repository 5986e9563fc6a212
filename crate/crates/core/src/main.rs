use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use driftdex::detector::{Calibration, ThetaConfig, ThetaMethod};
use driftdex::harness::bench::{run_bench, BenchSpec};
use driftdex::harness::csv_input::{ingest_csv, ColumnSpec, CsvOptions, NonNumeric};
use driftdex::harness::synth::{generate, DriftSchedule, SyntheticConfig};
use driftdex::index::{DriftIndex, IndexConfig, MaterializationPolicy, Mode};
use driftdex::query::{run_query, QueryOptions, QuerySpec};
use driftdex::stream::GranularityChain;
use driftdex::summarizer::{DecayConfig, EpsilonConfig};
use driftdex::{DriftError, Result};

#[derive(Parser, Debug)]
#[command(name = "driftdex", version)]
#[command(about = "Multi-granularity drift index over data streams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic stream with known drift positions
    Gen(GenArgs),
    /// Build a drift index from a CSV stream
    Ingest(IngestArgs),
    /// Query a saved index
    Query {
        #[command(subcommand)]
        query: QueryCommand,
    },
    /// Run a benchmark grid described by a TOML file
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
#[command(group = clap::ArgGroup::new("schedule").required(true))]
struct GenArgs {
    #[arg(long)]
    dim: usize,
    #[arg(long)]
    points: u64,
    /// Drift every P points
    #[arg(long, group = "schedule")]
    period: Option<u64>,
    /// Explicit drift ordinals
    #[arg(long, group = "schedule", value_delimiter = ',')]
    drift_at: Option<Vec<u64>>,
    #[arg(long, default_value_t = 5.0)]
    magnitude: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 3)]
    components: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    truth_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct IngestArgs {
    #[arg(long)]
    input: PathBuf,
    /// 1-based columns, e.g. `1,5-9`; all columns when absent
    #[arg(long)]
    columns: Option<ColumnSpec>,
    #[arg(long)]
    skip_header: bool,
    #[arg(long, default_value = "reject")]
    non_numeric: NonNumeric,
    #[arg(long, value_delimiter = ',', default_value = "100,500,1000")]
    granularities: Vec<u64>,
    #[arg(long, default_value = "independent")]
    mode: Mode,
    /// full | bottom | partial:G1,G2,...
    #[arg(long, default_value = "full")]
    policy: MaterializationPolicy,
    /// mean_k_sigma:K | quantile:Q
    #[arg(long, default_value = "mean_k_sigma:2")]
    theta: ThetaMethod,
    #[arg(long, default_value_t = 20)]
    window: usize,
    /// split_half | prequential
    #[arg(long, default_value = "split_half")]
    calibration: Calibration,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 200)]
    sample_size: usize,
    /// Fixed clustering radius instead of the learned one
    #[arg(long)]
    epsilon: Option<f64>,
    /// Fading rate per finest interval for cumulative mode
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Keep derived levels once computed
    #[arg(long)]
    cache_derived: bool,
    #[arg(long)]
    index_out: PathBuf,
}

#[derive(Args, Debug)]
struct IndexArg {
    #[arg(long)]
    index: PathBuf,
    /// Use window containment instead of interval containment on the source side
    #[arg(long)]
    window_containment: bool,
}

#[derive(Subcommand, Debug)]
enum QueryCommand {
    /// All drifts at one granularity
    Uq {
        #[command(flatten)]
        index: IndexArg,
        #[arg(long)]
        g: u64,
    },
    /// Localize coarse drifts at a finer level
    Rq {
        #[command(flatten)]
        index: IndexArg,
        #[arg(long)]
        gs: u64,
        #[arg(long)]
        gt: u64,
    },
    /// Summarize fine drifts at a coarser level
    Sq {
        #[command(flatten)]
        index: IndexArg,
        #[arg(long)]
        gs: u64,
        #[arg(long)]
        gt: u64,
    },
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    report: PathBuf,
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    fs::write(path, contents).map_err(|e| DriftError::Io {
        context: format!("writing {}", path.display()),
        source: e,
    })
}

fn cmd_gen(args: GenArgs) -> Result<()> {
    let schedule = match (args.period, args.drift_at) {
        (Some(p), _) => DriftSchedule::Periodic(p),
        (None, Some(at)) => DriftSchedule::At(at),
        (None, None) => unreachable!("clap enforces the schedule group"),
    };
    let cfg = SyntheticConfig {
        dim: args.dim,
        points: args.points,
        schedule,
        magnitude: args.magnitude,
        components: args.components,
        seed: args.seed,
    };
    let (points, truth) = generate(&cfg)?;

    let mut writer = csv::Writer::from_writer(Vec::new());
    for p in &points {
        writer
            .write_record(p.features.iter().map(|v| v.to_string()))
            .map_err(|e| DriftError::Data(e.to_string()))?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| DriftError::Data(e.to_string()))?;
    write_file(&args.out, &bytes)?;
    if let Some(path) = &args.truth_out {
        let text = serde_json::to_string_pretty(&truth).expect("truth serializes");
        write_file(path, text.as_bytes())?;
    }
    Ok(())
}

fn cmd_ingest(args: IngestArgs) -> Result<()> {
    let chain = GranularityChain::new(args.granularities)?;
    let mut config = IndexConfig::new(chain)
        .with_mode(args.mode)
        .with_policy(args.policy.with_cache(args.cache_derived))
        .with_theta(ThetaConfig {
            method: args.theta,
            window: args.window,
            calibration: args.calibration,
        });
    config.epsilon = EpsilonConfig {
        alpha: args.alpha,
        sample_size: args.sample_size,
    };
    config.decay = DecayConfig::new(args.lambda)?;
    if let Some(eps) = args.epsilon {
        config = config.with_fixed_epsilon(eps);
    }
    // config problems are reported before touching the data
    let mut index = DriftIndex::new(config)?;

    let opts = CsvOptions {
        columns: args.columns,
        skip_header: args.skip_header,
        non_numeric: args.non_numeric,
    };
    let (points, stats) = ingest_csv(&args.input, &opts)?;
    let count = points.len();
    index.ingest_all(points)?;
    index.save(&args.index_out)?;

    let summary = json!({
        "points": count,
        "columns": stats,
        "storage": index.storage_report(),
        "metadata": index.metadata(),
        "index": args.index_out,
    });
    println!(
        "{}",
        serde_json::to_string_pretty(&summary).expect("summary serializes")
    );
    Ok(())
}

fn cmd_query(query: QueryCommand) -> Result<()> {
    let (arg, spec) = match query {
        QueryCommand::Uq { index, g } => (index, QuerySpec::Unary { g }),
        QueryCommand::Rq { index, gs, gt } => (index, QuerySpec::Refinement { g_s: gs, g_t: gt }),
        QueryCommand::Sq { index, gs, gt } => (index, QuerySpec::Synthesis { g_s: gs, g_t: gt }),
    };
    let index = DriftIndex::load(&arg.index)?;
    let opts = QueryOptions {
        window_containment: arg.window_containment,
    };
    let result = run_query(&index, spec, opts)?;
    println!("{}", result.to_json());
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    let spec = BenchSpec::load(&args.spec)?;
    let report = run_bench(&spec)?;
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    write_file(&args.report, text.as_bytes())?;
    eprintln!(
        "{} cells written to {}",
        report.cells.len(),
        args.report.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Ingest(args) => cmd_ingest(args),
        Command::Query { query } => cmd_query(query),
        Command::Bench(args) => cmd_bench(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_data_error() { 2 } else { 1 })
        }
    }
}
