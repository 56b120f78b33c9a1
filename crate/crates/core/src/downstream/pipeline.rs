//! Reduce, reconstruct, then fit a downstream linear model on the
//! reconstructions and score it.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::flm::{FlmClassifier, FlmFitOptions};
use super::fof::FoFRegression;
use super::metrics::{classification_error, functional_rmse};
use crate::dataset::{split_indices, SplitSpec, Standardizer};
use crate::error::{shape_err, Error, Result};
use crate::grid::Grid;
use crate::math;
use crate::reduce::{fit_reconstruct, Reducer};
use crate::tensor::FunctionBatch;

pub const DEFAULT_RIDGE: f64 = 1e-3;
pub const RIDGE_GRID: [f64; 6] = [1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0];

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct PipelineConfig {
    /// z-score inputs with training statistics before reduction.
    pub standardize: bool,
    pub default_ridge: f64,
    /// Candidates searched on a held-out fifth of the training split.
    /// Empty means `default_ridge` is used as is.
    pub ridge_grid: Vec<f64>,
    pub validation_fraction: f64,
    pub seed: u64,
    pub flm: FlmFitOptions,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            standardize: true,
            default_ridge: DEFAULT_RIDGE,
            ridge_grid: RIDGE_GRID.to_vec(),
            validation_fraction: 0.2,
            seed: 0,
            flm: FlmFitOptions::default(),
        }
    }
}

/// Downstream target for [`evaluate_pipeline`].
#[derive(Debug, Clone, Copy)]
pub enum Task<'a> {
    /// Binary labels for the train and test curves.
    Classify { train: &'a [bool], test: &'a [bool] },
    /// Functional responses on `grid`.
    Regress { train: &'a FunctionBatch, test: &'a FunctionBatch, grid: &'a Grid },
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PipelineOutcome {
    pub reducer: String,
    /// Reconstruction RMSE of the inputs, original units; `None` for
    /// pass-through.
    pub reconstruction_train: Option<f64>,
    pub reconstruction_test: Option<f64>,
    /// Classification error, or response RMSE in response units.
    pub downstream_train: f64,
    pub downstream_test: f64,
    pub ridge: f64,
    pub latent_size: usize,
}

/// Pointwise RMSE of functional responses, in response units:
/// `sqrt(Σ_i Σ_r ∫ (y − ŷ)² / (N·R·|S|))`.
pub fn response_rmse(truth: &FunctionBatch, estimate: &FunctionBatch, grid: &Grid) -> Result<f64> {
    let f = functional_rmse(truth, estimate, grid)?;
    Ok(f / math::sqrt(truth.features() as f64 * grid.length()))
}

enum Fitted {
    Flm(FlmClassifier),
    Fof(FoFRegression),
}

fn fit_downstream(
    task: &Task<'_>,
    x: &FunctionBatch,
    rows: &[usize],
    grid: &Grid,
    ridge: f64,
    config: &PipelineConfig,
) -> Result<Fitted> {
    match task {
        Task::Classify { train, .. } => {
            let labels: Vec<bool> = rows.iter().map(|&i| train[i]).collect();
            let options = FlmFitOptions { ridge, ..config.flm };
            Ok(Fitted::Flm(FlmClassifier::fit(&x.select(rows), &labels, grid, &options)?))
        }
        Task::Regress { train, grid: out_grid, .. } => Ok(Fitted::Fof(FoFRegression::fit(
            &x.select(rows),
            &train.select(rows),
            grid,
            out_grid,
            ridge,
        )?)),
    }
}

fn score(fitted: &Fitted, x: &FunctionBatch, truth: Truth<'_>) -> Result<f64> {
    match (fitted, truth) {
        (Fitted::Flm(c), Truth::Labels(y)) => classification_error(y, &c.predict(x)?.0),
        (Fitted::Fof(f), Truth::Curves(y, g)) => response_rmse(y, &f.predict(x)?, g),
        _ => Err(shape_err("task and model disagree")),
    }
}

#[derive(Clone, Copy)]
enum Truth<'a> {
    Labels(&'a [bool]),
    Curves(&'a FunctionBatch, &'a Grid),
}

fn truth_rows<'a>(task: &Task<'a>, rows: Option<&[usize]>, buf: &'a mut (Vec<bool>, Option<FunctionBatch>)) -> Truth<'a> {
    match (task, rows) {
        (Task::Classify { train, .. }, None) => Truth::Labels(train),
        (Task::Classify { train, .. }, Some(r)) => {
            buf.0 = r.iter().map(|&i| train[i]).collect();
            Truth::Labels(&buf.0)
        }
        (Task::Regress { train, grid, .. }, None) => Truth::Curves(train, grid),
        (Task::Regress { train, grid, .. }, Some(r)) => {
            buf.1 = Some(train.select(r));
            Truth::Curves(buf.1.as_ref().expect("just set"), grid)
        }
    }
}

fn choose_ridge(task: &Task<'_>, x: &FunctionBatch, grid: &Grid, config: &PipelineConfig) -> Result<f64> {
    if config.ridge_grid.is_empty() {
        return Ok(config.default_ridge);
    }
    let spec = SplitSpec { train_fraction: 1.0 - config.validation_fraction, seed: config.seed, shuffle: true };
    let (fit_rows, val_rows) = split_indices(x.n(), &spec)?;
    let x_val = x.select(&val_rows);
    let mut best: Option<(f64, f64)> = None;
    // The default is scored first so it wins ties.
    let candidates =
        core::iter::once(config.default_ridge).chain(config.ridge_grid.iter().copied().filter(|r| *r != config.default_ridge));
    for ridge in candidates {
        let fitted = match fit_downstream(task, x, &fit_rows, grid, ridge, config) {
            Ok(f) => f,
            // a fold without both classes carries no information
            Err(Error::SingleClass) => continue,
            Err(e) => return Err(e),
        };
        let mut buf = (Vec::new(), None);
        let e = score(&fitted, &x_val, truth_rows(task, Some(&val_rows), &mut buf))?;
        if best.map_or(true, |(b, _)| e < b) {
            best = Some((e, ridge));
        }
    }
    Ok(best.map_or(config.default_ridge, |(_, r)| r))
}

/// Fit `reducer` on the training inputs, reconstruct both splits, fit the
/// downstream model on the reconstructed training inputs and score it on
/// both reconstructed splits.
pub fn evaluate_pipeline(
    reducer: &Reducer,
    task: &Task<'_>,
    train: &FunctionBatch,
    test: &FunctionBatch,
    grid: &Grid,
    config: &PipelineConfig,
) -> Result<PipelineOutcome> {
    match task {
        Task::Classify { train: yt, test: ys } => {
            if yt.len() != train.n() || ys.len() != test.n() {
                return Err(shape_err("label count"));
            }
        }
        Task::Regress { train: yt, test: ys, grid: g } => {
            if yt.n() != train.n() || ys.n() != test.n() || yt.points() != g.len() || ys.points() != g.len() {
                return Err(shape_err("response shapes"));
            }
        }
    }
    let passthrough = matches!(reducer, Reducer::None);
    let (rec_train, rec_test, latent_size) = if passthrough {
        (train.clone(), test.clone(), train.width())
    } else if config.standardize {
        let z = Standardizer::fit(train)?;
        let r = fit_reconstruct(reducer, &z.apply(train)?, &z.apply(test)?, grid)?;
        (z.invert(&r.train)?, z.invert(&r.test)?, r.latent_size)
    } else {
        let r = fit_reconstruct(reducer, train, test, grid)?;
        (r.train, r.test, r.latent_size)
    };
    let (reconstruction_train, reconstruction_test) = if passthrough {
        (None, None)
    } else {
        (Some(functional_rmse(train, &rec_train, grid)?), Some(functional_rmse(test, &rec_test, grid)?))
    };

    let ridge = choose_ridge(task, &rec_train, grid, config)?;
    let all: Vec<usize> = (0..rec_train.n()).collect();
    let fitted = fit_downstream(task, &rec_train, &all, grid, ridge, config)?;
    let mut buf = (Vec::new(), None);
    let downstream_train = score(&fitted, &rec_train, truth_rows(task, None, &mut buf))?;
    let test_truth = match task {
        Task::Classify { test, .. } => Truth::Labels(test),
        Task::Regress { test, grid, .. } => Truth::Curves(test, grid),
    };
    let downstream_test = score(&fitted, &rec_test, test_truth)?;
    Ok(PipelineOutcome {
        reducer: reducer.name().to_string(),
        reconstruction_train,
        reconstruction_test,
        downstream_train,
        downstream_test,
        ridge,
        latent_size,
    })
}
