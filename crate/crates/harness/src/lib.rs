//! Configuration-driven experiments on top of [`topotrack`]: Monte-Carlo
//! tracking runs, Jacobian timing and observability rank studies, all
//! emitting flat CSV.

pub mod bench;
pub mod config;
pub mod error;
pub mod output;
pub mod presets;
pub mod runner;
pub mod study;

pub use config::{ExperimentConfig, InitEstimate, SweepPoint, TrackerKind, TrackerSpec};
pub use error::{HarnessError, Result};
pub use runner::{run_experiment, AggregateRow, ExperimentResults, ResultRow, RunOptions, SummaryRow, TimingRow};
