//! Streaming drift detection over a hierarchy of count-based granularities.
//!
//! Points are summarized per finest interval into cluster features, coarser
//! levels are either stored or derived from the finest summaries, and drifts
//! between consecutive intervals are flagged against an adaptive threshold.
//! Unary, refinement and synthesis queries read the resulting drift sets.

pub mod detector;
pub mod error;
pub mod harness;
pub mod index;
pub mod query;
pub mod stream;
pub mod summarizer;

pub use detector::{Calibration, Drift, DriftSet, ThetaConfig, ThetaMethod};
pub use error::{DriftError, Result};
pub use index::{DriftIndex, IndexConfig, MaterializationPolicy, Mode};
pub use query::{rq, run_query, sq, uq, QueryOptions, QueryResult, QuerySpec};
pub use stream::{DataPoint, GranularityChain};
