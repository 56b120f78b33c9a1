//! Numerical core of the bi-functional autoencoder (BFAE).
//!
//! Curves are stored as values on a [`Grid`] and every integral is a
//! trapezoidal quadrature over that grid. A [`ContinuousLayer`] maps `J_in`
//! input functions to `J_out` output functions through learnable weight
//! surfaces `w(s, t)` and bias functions `b(s)`; stacking such layers with a
//! narrow middle gives an autoencoder whose latent code is itself a small
//! set of functions observed on a coarse grid.
//!
//! The crate is `no_std` and needs only `alloc`. File formats, the
//! experiment harness and the command-line tool live in the `bfae` crate.
#![no_std]
#![cfg_attr(not(test), deny(unsafe_op_in_unsafe_fn))]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod activation;
pub mod baselines;
pub mod dataset;
pub mod downstream;
pub mod error;
pub mod gp;
pub mod grid;
pub mod layer;
pub mod linalg;
pub mod math;
pub mod model;
pub mod reduce;
pub mod rng;
pub mod tensor;

pub use activation::Activation;
pub use dataset::{FunctionalDataset, SplitSpec, Standardizer};
pub use error::{Error, Result};
pub use grid::Grid;
pub use model::{BfaeConfig, BfaeModel, GradientMetric, TrainHistory};
pub use layer::{ContinuousLayer, InitScheme, LayerCache, LayerGrads};
pub use reduce::{fit_reconstruct, Reducer};
pub use tensor::FunctionBatch;
