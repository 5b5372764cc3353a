//! Simulator, experiment harness and command-line front end for the
//! cognitive service manager in `qcsm-core`.
//!
//! Everything here touches the outside world: scenario files, CSV and JSON
//! artifacts, statistics over seeds and the read-only pool endpoint.

pub mod config;
pub mod harness;
pub mod report;
pub mod serve;
pub mod stats;

pub use config::{load_config, LoadedConfig, LoadError};
pub use harness::{ExperimentResult, MetricsRecord};
