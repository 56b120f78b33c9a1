//! Reconstruction metrics and the downstream models used to judge whether
//! reduced data keep the signal: a functional logistic classifier and a
//! function-on-function linear regression.

pub mod flm;
pub mod fof;
pub mod metrics;
pub mod pipeline;

pub use flm::{FlmClassifier, FlmFitOptions};
pub use fof::FoFRegression;
pub use metrics::{classification_error, functional_rmse, rmse};
pub use pipeline::{evaluate_pipeline, PipelineConfig, PipelineOutcome, Task};
