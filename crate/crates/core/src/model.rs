//! The bi-functional autoencoder: a stack of continuous layers whose
//! `latent_index`-th output is the latent code, trained by gradient descent
//! on the integrated squared reconstruction error.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::activation::Activation;
use crate::error::{shape_err, Error, Result};
use crate::grid::Grid;
use crate::layer::{ContinuousLayer, InitScheme, LayerCache, LayerGrads};
use crate::rng;
use crate::tensor::FunctionBatch;

/// Metric in which parameter gradients are taken before a descent step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum GradientMetric {
    /// Plain gradient with respect to the stored grid values.
    Euclidean,
    /// L² gradient of the weight surfaces and bias functions: the Euclidean
    /// gradient with quadrature weights divided out, so step sizes do not
    /// depend on grid resolution.
    #[default]
    FunctionSpace,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct BfaeConfig {
    /// Neurons per layer `[R, J_1, …, J_{L-1}, R]`.
    pub feature_counts: Vec<usize>,
    /// Timepoints per layer `[M, M_1, …, M_{L-1}, M]`.
    pub grid_sizes: Vec<usize>,
    /// Layer whose output is the latent code, in `1..L`.
    pub latent_index: usize,
    /// One activation per layer; the last is normally linear.
    pub activations: Vec<Activation>,
    /// Interval shared by all layer grids.
    pub interval: [f64; 2],
    pub lr: f64,
    pub epochs: usize,
    /// Mini-batch size; `None` means full-batch gradient descent.
    pub batch_size: Option<usize>,
    /// Classical momentum coefficient; 0 disables it.
    pub momentum: f64,
    pub metric: GradientMetric,
    pub init: InitScheme,
    pub seed: u64,
}

impl Default for BfaeConfig {
    fn default() -> Self {
        Self::autoencoder(1, 50, 1, 50)
    }
}

impl BfaeConfig {
    pub const DEFAULT_LR: f64 = 1e-2;
    pub const DEFAULT_EPOCHS: usize = 2000;

    /// One encoder layer `(R, M) → (R', M')` with tanh and one linear decoder
    /// layer back to `(R, M)`.
    pub fn autoencoder(r: usize, m: usize, r_latent: usize, m_latent: usize) -> Self {
        Self {
            feature_counts: vec![r, r_latent, r],
            grid_sizes: vec![m, m_latent, m],
            latent_index: 1,
            activations: vec![Activation::Tanh, Activation::Linear],
            interval: [0.0, 1.0],
            lr: Self::DEFAULT_LR,
            epochs: Self::DEFAULT_EPOCHS,
            batch_size: None,
            momentum: 0.0,
            metric: GradientMetric::default(),
            init: InitScheme::default(),
            seed: 0,
        }
    }

    /// Symmetric deep variant: `hidden` gives `(J, M)` of extra layers
    /// inserted on each side of the latent layer, outermost first.
    pub fn deep_autoencoder(
        r: usize,
        m: usize,
        r_latent: usize,
        m_latent: usize,
        hidden: &[(usize, usize)],
    ) -> Self {
        let mut features = vec![r];
        let mut grids = vec![m];
        for &(j, mh) in hidden {
            features.push(j);
            grids.push(mh);
        }
        let latent_index = features.len();
        features.push(r_latent);
        grids.push(m_latent);
        for &(j, mh) in hidden.iter().rev() {
            features.push(j);
            grids.push(mh);
        }
        features.push(r);
        grids.push(m);
        let layers = features.len() - 1;
        let mut activations = vec![Activation::Tanh; layers];
        activations[layers - 1] = Activation::Linear;
        Self {
            feature_counts: features,
            grid_sizes: grids,
            latent_index,
            activations,
            ..Self::autoencoder(r, m, r_latent, m_latent)
        }
    }

    pub fn n_layers(&self) -> usize {
        self.feature_counts.len().saturating_sub(1)
    }

    pub fn latent_shape(&self) -> (usize, usize) {
        (self.feature_counts[self.latent_index], self.grid_sizes[self.latent_index])
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.feature_counts.len();
        if n < 3 {
            return Err(shape_err("need at least two layers (feature_counts of length >= 3)"));
        }
        if self.grid_sizes.len() != n {
            return Err(shape_err("grid_sizes must have the same length as feature_counts"));
        }
        if self.activations.len() != n - 1 {
            return Err(shape_err("need one activation per layer"));
        }
        if self.feature_counts[0] != self.feature_counts[n - 1] {
            return Err(shape_err("first and last feature counts must both equal R"));
        }
        if self.grid_sizes[0] != self.grid_sizes[n - 1] {
            return Err(shape_err("first and last grid sizes must both equal M"));
        }
        if self.feature_counts.iter().any(|&j| j == 0) || self.grid_sizes.iter().any(|&m| m == 0) {
            return Err(shape_err("feature counts and grid sizes must be positive"));
        }
        if self.grid_sizes[0] < 2 {
            return Err(Error::TooFewPoints(self.grid_sizes[0]));
        }
        if self.latent_index == 0 || self.latent_index >= n - 1 {
            return Err(Error::LatentIndexOutOfRange { index: self.latent_index, layers: n - 1 });
        }
        if self.grid_sizes[self.latent_index] > self.grid_sizes[0] {
            return Err(shape_err("latent grid must not be finer than the data grid"));
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(Error::InvalidParameter(format!("lr must be >= 0, got {}", self.lr)));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidParameter(format!("momentum must be in [0, 1), got {}", self.momentum)));
        }
        if self.batch_size == Some(0) {
            return Err(Error::InvalidParameter("batch_size must be >= 1".into()));
        }
        Ok(())
    }

    /// Grid used by layer boundary `k` (0 = data grid).
    fn layer_grid(&self, k: usize, data_grid: &Grid) -> Result<Grid> {
        let n = self.grid_sizes.len();
        if k == 0 || k == n - 1 {
            return Ok(data_grid.clone());
        }
        let m = self.grid_sizes[k];
        let [a, b] = [data_grid.start(), data_grid.end()];
        if m == 1 {
            return Grid::single_point(a, b);
        }
        Grid::uniform(a, b, m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BfaeModel {
    pub layers: Vec<ContinuousLayer>,
    pub latent_index: usize,
}

/// Loss recorded at the start of every epoch.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainHistory {
    pub train_loss: Vec<f64>,
    pub validation_loss: Vec<f64>,
}

/// Integrated squared error averaged over samples:
/// `(1/N)·Σ_i Σ_r ∫ (X − X̂)² dt`.
pub fn loss(batch: &FunctionBatch, reconstruction: &FunctionBatch, grid: &Grid) -> Result<f64> {
    batch.check_shape(reconstruction, "loss: reconstruction shape")?;
    if batch.points() != grid.len() {
        return Err(Error::LengthMismatch { expected: grid.len(), actual: batch.points() });
    }
    let q = grid.weights();
    let total: f64 = batch
        .as_slice()
        .chunks_exact(q.len())
        .zip(reconstruction.as_slice().chunks_exact(q.len()))
        .map(|(x, y)| x.iter().zip(y).zip(q).map(|((a, b), w)| w * (a - b) * (a - b)).sum::<f64>())
        .sum();
    Ok(total / batch.n() as f64)
}

impl BfaeModel {
    /// Build on a uniform data grid over `config.interval`.
    pub fn build(config: &BfaeConfig) -> Result<Self> {
        config.validate()?;
        let [a, b] = config.interval;
        let grid = Grid::uniform(a, b, config.grid_sizes[0])?;
        Self::build_on_grid(config, &grid)
    }

    /// Build with the given data grid for the input and output layers.
    pub fn build_on_grid(config: &BfaeConfig, data_grid: &Grid) -> Result<Self> {
        config.validate()?;
        if data_grid.len() != config.grid_sizes[0] {
            return Err(Error::LengthMismatch { expected: config.grid_sizes[0], actual: data_grid.len() });
        }
        let n_layers = config.n_layers();
        let mut layers = Vec::with_capacity(n_layers);
        for l in 0..n_layers {
            let layer = ContinuousLayer::init(
                config.layer_grid(l, data_grid)?,
                config.layer_grid(l + 1, data_grid)?,
                config.feature_counts[l],
                config.feature_counts[l + 1],
                config.activations[l],
                config.init,
                rng::derive_seed(config.seed, l as u64),
            )?;
            layers.push(layer);
        }
        Ok(Self { layers, latent_index: config.latent_index })
    }

    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn data_grid(&self) -> &Grid {
        &self.layers[0].in_grid
    }

    pub fn n_features(&self) -> usize {
        self.layers[0].j_in
    }

    pub fn latent_shape(&self) -> (usize, usize) {
        let l = &self.layers[self.latent_index - 1];
        (l.j_out, l.m_out())
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.n_params()).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.len() < 2 {
            return Err(shape_err("model needs at least two layers"));
        }
        if self.latent_index == 0 || self.latent_index >= self.layers.len() {
            return Err(Error::LatentIndexOutOfRange { index: self.latent_index, layers: self.layers.len() });
        }
        for l in &self.layers {
            l.validate()?;
        }
        for w in self.layers.windows(2) {
            if w[0].j_out != w[1].j_in || w[0].out_grid != w[1].in_grid {
                return Err(shape_err("adjacent layers do not chain"));
            }
        }
        let (first, last) = (&self.layers[0], &self.layers[self.layers.len() - 1]);
        if first.j_in != last.j_out || first.in_grid != last.out_grid {
            return Err(shape_err("output layer must return to the input shape"));
        }
        Ok(())
    }

    fn check_batch(&self, batch: &FunctionBatch) -> Result<()> {
        let l = &self.layers[0];
        if batch.features() != l.j_in || batch.points() != l.m_in() {
            return Err(shape_err("batch must be N × R × M on the model grid"));
        }
        Ok(())
    }

    /// Reconstruction plus per-layer caches.
    pub fn forward(&self, batch: &FunctionBatch) -> Result<(FunctionBatch, Vec<LayerCache>)> {
        self.check_batch(batch)?;
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut h = batch.clone();
        for layer in &self.layers {
            let (out, cache) = layer.forward(&h)?;
            caches.push(cache);
            h = out;
        }
        Ok((h, caches))
    }

    /// Output of the latent layer, `N × R' × M'`.
    pub fn encode(&self, batch: &FunctionBatch) -> Result<FunctionBatch> {
        self.check_batch(batch)?;
        let mut h = batch.clone();
        for layer in &self.layers[..self.latent_index] {
            h = layer.apply(&h)?;
        }
        Ok(h)
    }

    /// Map latent codes back to data space.
    pub fn decode(&self, latent: &FunctionBatch) -> Result<FunctionBatch> {
        let mut h = latent.clone();
        for layer in &self.layers[self.latent_index..] {
            h = layer.apply(&h)?;
        }
        Ok(h)
    }

    pub fn reconstruct(&self, batch: &FunctionBatch) -> Result<FunctionBatch> {
        self.decode(&self.encode(batch)?)
    }

    pub fn loss(&self, batch: &FunctionBatch) -> Result<f64> {
        loss(batch, &self.reconstruct(batch)?, self.data_grid())
    }

    /// Loss and exact Euclidean gradients of the discretised loss.
    pub fn gradients(&self, batch: &FunctionBatch) -> Result<(f64, Vec<LayerGrads>)> {
        let (recon, caches) = self.forward(batch)?;
        let value = loss(batch, &recon, self.data_grid())?;
        // ∂L/∂X̂ = (2/N)·q(s)·(X̂ − X)
        let q = self.data_grid().weights();
        let scale = 2.0 / batch.n() as f64;
        let mut upstream = recon;
        for (chunk, x) in upstream
            .as_mut_slice()
            .chunks_exact_mut(q.len())
            .zip(batch.as_slice().chunks_exact(q.len()))
        {
            for ((u, xv), w) in chunk.iter_mut().zip(x).zip(q) {
                *u = scale * w * (*u - xv);
            }
        }
        let mut grads = vec![None; self.layers.len()];
        for (k, (layer, cache)) in self.layers.iter().zip(&caches).enumerate().rev() {
            let (g, down) = layer.backward(cache, &upstream)?;
            grads[k] = Some(g);
            upstream = down;
        }
        Ok((value, grads.into_iter().map(|g| g.expect("every layer visited")).collect()))
    }

    /// Flattened parameter `k` across all layers, in layer order.
    pub fn param_mut(&mut self, mut k: usize) -> &mut f64 {
        for layer in &mut self.layers {
            let n = layer.n_params();
            if k < n {
                return layer.param_mut(k);
            }
            k -= n;
        }
        panic!("parameter index out of range");
    }

    /// Gradient descent on `data`, optionally tracking a validation loss.
    pub fn train(
        &mut self,
        data: &FunctionBatch,
        config: &BfaeConfig,
        validation: Option<&FunctionBatch>,
    ) -> Result<TrainHistory> {
        config.validate()?;
        self.check_batch(data)?;
        if data.n() == 0 {
            return Err(Error::InvalidParameter("training data is empty".into()));
        }
        if let Some(v) = validation {
            self.check_batch(v)?;
        }
        let batch_size = config.batch_size.unwrap_or(data.n()).min(data.n());
        let batches: Vec<FunctionBatch> = if batch_size == data.n() {
            vec![data.clone()]
        } else {
            let idx: Vec<usize> = (0..data.n()).collect();
            idx.chunks(batch_size).map(|c| data.select(c)).collect()
        };
        let mut velocity: Vec<LayerGrads> = self.layers.iter().map(LayerGrads::zeros_like).collect();
        let mut history = TrainHistory::default();
        let mut last_finite = f64::NAN;
        for epoch in 0..config.epochs {
            let mut epoch_loss = 0.0;
            for batch in &batches {
                let (value, mut grads) = self.gradients(batch)?;
                if !value.is_finite() {
                    return Err(Error::Divergence { epoch, last_finite_loss: last_finite });
                }
                epoch_loss += value * batch.n() as f64;
                for ((layer, g), v) in self.layers.iter_mut().zip(&mut grads).zip(&mut velocity) {
                    if config.metric == GradientMetric::FunctionSpace {
                        layer.to_function_space(g);
                    }
                    if config.momentum > 0.0 {
                        for (vi, gi) in v.weights.iter_mut().zip(&g.weights) {
                            *vi = config.momentum * *vi + gi;
                        }
                        for (vi, gi) in v.biases.iter_mut().zip(&g.biases) {
                            *vi = config.momentum * *vi + gi;
                        }
                        layer.sgd_step(v, config.lr, 1)?;
                    } else {
                        // the loss already averages over the batch
                        layer.sgd_step(g, config.lr, 1)?;
                    }
                }
            }
            let epoch_loss = epoch_loss / data.n() as f64;
            last_finite = epoch_loss;
            history.train_loss.push(epoch_loss);
            if let Some(v) = validation {
                history.validation_loss.push(self.loss(v)?);
            }
        }
        if self.layers.iter().any(|l| l.params().any(|p| !p.is_finite())) {
            return Err(Error::Divergence { epoch: config.epochs, last_finite_loss: last_finite });
        }
        Ok(history)
    }
}
