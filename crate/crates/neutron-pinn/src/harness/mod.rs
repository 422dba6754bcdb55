//! Experiment harness: flat key=value configuration, accuracy metrics,
//! run orchestration and the command-line interface.

pub mod cli;
pub mod config;
pub mod metrics;
pub mod runners;

pub use config::{ExperimentConfig, KvConfig, ProblemId};
pub use metrics::{compute_metrics, MetricsReport};
