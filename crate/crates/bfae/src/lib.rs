//! Experiment harness for the bi-functional autoencoder: dataset files,
//! configuration, model files, reports and the runners behind the `bfae`
//! command-line tool. The numerics live in `bfae-core`.

pub mod config;
pub mod error;
pub mod experiment;
pub mod io;
pub mod modelfile;
pub mod report;
pub mod synthetic;

pub use config::{ExperimentConfig, ExperimentKind};
pub use error::{Error, Result};
pub use report::{ExperimentReport, ReportRow};
