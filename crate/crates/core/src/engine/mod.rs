//! Replication orchestration: configuration, parallel batches, aggregation
//! and export. This is the only place that spawns threads.

pub mod aggregate;
pub mod batch;
pub mod check;
pub mod config;
pub mod export;

pub use aggregate::{mean_and_se, AggregateResult, CheckpointStat, Outcome, RegretAggregate, ReplicationSink};
pub use batch::{run_batch, run_batch_timed, RunStats};
pub use check::{assert_checks, Check};
pub use config::{Experiment, ExperimentConfig, ExperimentKind, ModelPair, OutputSpec};
pub use export::{export, read_json, to_csv_string, to_json_string, ExportFormat};
