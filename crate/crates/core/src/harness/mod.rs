//! Experiment plumbing: synthetic streams, CSV loading, scoring against
//! ground truth and the benchmark grid.

pub mod bench;
pub mod csv_input;
pub mod eval;
pub mod synth;

pub use bench::{run_bench, BenchReport, BenchSpec, CellReport};
pub use csv_input::{
    ingest_csv, ColumnSpec, ColumnStats, CsvOptions, NonNumeric, KDD99_NUMERIC_COLUMNS,
};
pub use eval::{score_detection, LevelScore};
pub use synth::{generate, DriftSchedule, GroundTruth, Segment, SyntheticConfig, SyntheticStream};
