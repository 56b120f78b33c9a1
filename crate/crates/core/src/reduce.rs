//! Uniform front end over the dimension reducers: fit on a training batch,
//! then reconstruct training and test batches.

use alloc::vec::Vec;

use crate::baselines::ae::{AeConfig, AeModel};
use crate::baselines::fpca::FpcaModel;
use crate::baselines::pca::{flatten, PcaModel};
use crate::error::{shape_err, Result};
use crate::grid::Grid;
use crate::model::{BfaeConfig, BfaeModel};
use crate::tensor::FunctionBatch;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase", tag = "kind"))]
pub enum Reducer {
    /// Pass-through; the "original data" column.
    None,
    Pca { variance_target: f64 },
    Fpca { variance_target: f64 },
    Ae(AeConfig),
    Bfae(BfaeConfig),
}

impl Reducer {
    pub fn name(&self) -> &'static str {
        match self {
            Reducer::None => "none",
            Reducer::Pca { .. } => "pca",
            Reducer::Fpca { .. } => "fpca",
            Reducer::Ae(_) => "ae",
            Reducer::Bfae(_) => "bfae",
        }
    }
}

/// Output of [`fit_reconstruct`].
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub train: FunctionBatch,
    pub test: FunctionBatch,
    /// Number of scalars in one sample's code (`R·M` for pass-through).
    pub latent_size: usize,
    /// Per-epoch training loss for the neural reducers, empty otherwise.
    pub train_loss: Vec<f64>,
}

fn unflatten(m: crate::linalg::Matrix, like: &FunctionBatch) -> Result<FunctionBatch> {
    FunctionBatch::from_vec(m.rows(), like.features(), like.points(), m.into_vec())
}

/// Fit `reducer` on `train` and reconstruct both batches.
pub fn fit_reconstruct(
    reducer: &Reducer,
    train: &FunctionBatch,
    test: &FunctionBatch,
    grid: &Grid,
) -> Result<Reconstruction> {
    if train.features() != test.features() || train.points() != test.points() || train.points() != grid.len() {
        return Err(shape_err("train/test/grid shapes disagree"));
    }
    match reducer {
        Reducer::None => Ok(Reconstruction {
            train: train.clone(),
            test: test.clone(),
            latent_size: train.width(),
            train_loss: Vec::new(),
        }),
        Reducer::Pca { variance_target } => {
            let model = PcaModel::fit(&flatten(train), *variance_target)?;
            Ok(Reconstruction {
                train: model.reconstruct_batch(train)?,
                test: model.reconstruct_batch(test)?,
                latent_size: model.k(),
                train_loss: Vec::new(),
            })
        }
        Reducer::Fpca { variance_target } => {
            let model = FpcaModel::fit(train, grid, *variance_target)?;
            Ok(Reconstruction {
                train: model.reconstruct(train)?,
                test: model.reconstruct(test)?,
                latent_size: model.k(),
                train_loss: Vec::new(),
            })
        }
        Reducer::Ae(config) => {
            let mut model = AeModel::build(config)?;
            let x = flatten(train);
            let history = model.train(&x, config)?;
            Ok(Reconstruction {
                train: unflatten(model.reconstruct(&x)?, train)?,
                test: unflatten(model.reconstruct(&flatten(test))?, test)?,
                latent_size: config.widths[config.latent_index],
                train_loss: history,
            })
        }
        Reducer::Bfae(config) => {
            let mut model = BfaeModel::build_on_grid(config, grid)?;
            let history = model.train(train, config, None)?;
            let (j, m) = model.latent_shape();
            Ok(Reconstruction {
                train: model.reconstruct(train)?,
                test: model.reconstruct(test)?,
                latent_size: j * m,
                train_loss: history.train_loss,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn passthrough_and_full_rank_pca_are_exact() {
        let g = Grid::uniform(0.0, 1.0, 5).unwrap();
        let mut s = rng::seeded(1);
        let x = FunctionBatch::from_fn(30, 2, 5, |_, _, _| rng::normal(&mut s));
        let r = fit_reconstruct(&Reducer::None, &x, &x, &g).unwrap();
        assert_eq!(r.test, x);
        let r = fit_reconstruct(&Reducer::Pca { variance_target: 1.0 }, &x, &x, &g).unwrap();
        let err = r.test.as_slice().iter().zip(x.as_slice()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-9);
    }

    #[test]
    fn neural_reducers_report_latent_size() {
        let g = Grid::uniform(0.0, 1.0, 8).unwrap();
        let mut s = rng::seeded(2);
        let x = FunctionBatch::from_fn(10, 2, 8, |_, _, _| rng::normal(&mut s));
        let mut c = BfaeConfig::autoencoder(2, 8, 1, 3);
        c.epochs = 3;
        let r = fit_reconstruct(&Reducer::Bfae(c.clone()), &x, &x, &g).unwrap();
        assert_eq!((r.latent_size, r.train_loss.len()), (3, 3));
        let r = fit_reconstruct(&Reducer::Ae(AeConfig::mirror(&c)), &x, &x, &g).unwrap();
        assert_eq!((r.latent_size, r.train_loss.len()), (3, 3));
    }
}
