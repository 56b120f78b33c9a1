//! Classical fully connected autoencoder on flattened `R·M` vectors.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::activation::Activation;
use crate::error::{shape_err, Error, Result};
use crate::linalg::{gemm, MatMut, MatRef, Matrix};
use crate::math;
use crate::model::BfaeConfig;
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub n_in: usize,
    pub n_out: usize,
    /// Row-major `n_out × n_in`.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
    pub activation: Activation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrads {
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

pub struct DenseCache {
    pub input: Matrix,
    pub pre_activation: Matrix,
}

impl DenseLayer {
    /// Glorot-uniform weights, zero biases.
    pub fn init(n_in: usize, n_out: usize, activation: Activation, seed: u64) -> Self {
        let c = math::sqrt(6.0 / (n_in + n_out) as f64);
        let mut s = rng::seeded(seed);
        let weights = (0..n_in * n_out).map(|_| rng::uniform(&mut s, -c, c)).collect();
        Self { n_in, n_out, weights, biases: vec![0.0; n_out], activation }
    }

    fn pre_activation(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.n_in {
            return Err(shape_err("dense layer input width"));
        }
        let n = x.rows();
        let mut pre = Matrix::zeros(n, self.n_out);
        for i in 0..n {
            pre.row_mut(i).copy_from_slice(&self.biases);
        }
        gemm(
            n,
            self.n_in,
            self.n_out,
            1.0,
            MatRef::row_major(x.as_slice(), self.n_in),
            MatRef::col_major(&self.weights, self.n_in),
            1.0,
            MatMut::row_major(pre.as_mut_slice(), self.n_out),
        );
        Ok(pre)
    }

    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        let mut out = self.pre_activation(x)?;
        let act = self.activation;
        out.as_mut_slice().iter_mut().for_each(|v| *v = act.apply(*v));
        Ok(out)
    }

    pub fn forward(&self, x: &Matrix) -> Result<(Matrix, DenseCache)> {
        let pre = self.pre_activation(x)?;
        let mut out = pre.clone();
        let act = self.activation;
        out.as_mut_slice().iter_mut().for_each(|v| *v = act.apply(*v));
        Ok((out, DenseCache { input: x.clone(), pre_activation: pre }))
    }

    pub fn backward(&self, cache: &DenseCache, upstream: &Matrix) -> Result<(DenseGrads, Matrix)> {
        let n = cache.input.rows();
        if upstream.rows() != n || upstream.cols() != self.n_out {
            return Err(shape_err("dense upstream gradient"));
        }
        let act = self.activation;
        let mut delta = upstream.clone();
        for (d, p) in delta.as_mut_slice().iter_mut().zip(cache.pre_activation.as_slice()) {
            *d *= act.derivative(*p);
        }
        let mut gw = vec![0.0; self.weights.len()];
        gemm(
            self.n_out,
            n,
            self.n_in,
            1.0,
            MatRef::col_major(delta.as_slice(), self.n_out),
            MatRef::row_major(cache.input.as_slice(), self.n_in),
            0.0,
            MatMut::row_major(&mut gw, self.n_in),
        );
        let mut gb = vec![0.0; self.n_out];
        for i in 0..n {
            gb.iter_mut().zip(delta.row(i)).for_each(|(g, d)| *g += d);
        }
        let mut gx = Matrix::zeros(n, self.n_in);
        gemm(
            n,
            self.n_out,
            self.n_in,
            1.0,
            MatRef::row_major(delta.as_slice(), self.n_out),
            MatRef::row_major(&self.weights, self.n_in),
            0.0,
            MatMut::row_major(gx.as_mut_slice(), self.n_in),
        );
        Ok((DenseGrads { weights: gw, biases: gb }, gx))
    }

    pub fn n_params(&self) -> usize {
        self.weights.len() + self.biases.len()
    }

    pub fn param_mut(&mut self, k: usize) -> &mut f64 {
        let nw = self.weights.len();
        if k < nw {
            &mut self.weights[k]
        } else {
            &mut self.biases[k - nw]
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AeConfig {
    /// Layer widths `[D, h_1, …, D]`.
    pub widths: Vec<usize>,
    pub latent_index: usize,
    pub activations: Vec<Activation>,
    /// Loss is `loss_scale · (1/N)·Σ_i ‖x_i − x̂_i‖²`.
    pub loss_scale: f64,
    pub lr: f64,
    pub epochs: usize,
    pub momentum: f64,
    pub seed: u64,
}

impl AeConfig {
    /// Same layer count, activations and optimiser settings as a BFAE
    /// configuration, with widths `J_l·M_l` (so the bottleneck is `R'·M'`).
    /// The loss averages over timepoints, matching the scale of the
    /// integrated loss on a unit interval.
    pub fn mirror(bfae: &BfaeConfig) -> Self {
        let widths = bfae.feature_counts.iter().zip(&bfae.grid_sizes).map(|(j, m)| j * m).collect();
        Self {
            widths,
            latent_index: bfae.latent_index,
            activations: bfae.activations.clone(),
            loss_scale: (bfae.interval[1] - bfae.interval[0]) / bfae.grid_sizes[0] as f64,
            lr: bfae.lr,
            epochs: bfae.epochs,
            momentum: bfae.momentum,
            seed: bfae.seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.widths.len();
        if n < 3 || self.activations.len() != n - 1 {
            return Err(shape_err("AE needs >= 2 layers and one activation per layer"));
        }
        if self.widths[0] != self.widths[n - 1] || self.widths.iter().any(|w| *w == 0) {
            return Err(shape_err("AE output width must equal input width"));
        }
        if self.latent_index == 0 || self.latent_index >= n - 1 {
            return Err(Error::LatentIndexOutOfRange { index: self.latent_index, layers: n - 1 });
        }
        if !(self.lr >= 0.0) || !(0.0..1.0).contains(&self.momentum) || !(self.loss_scale > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "bad AE optimiser settings: lr {}, momentum {}, loss_scale {}",
                self.lr, self.momentum, self.loss_scale
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AeModel {
    pub layers: Vec<DenseLayer>,
    pub latent_index: usize,
    pub loss_scale: f64,
}

impl AeModel {
    pub fn build(config: &AeConfig) -> Result<Self> {
        config.validate()?;
        let layers = config
            .widths
            .windows(2)
            .zip(&config.activations)
            .enumerate()
            .map(|(l, (w, act))| DenseLayer::init(w[0], w[1], *act, rng::derive_seed(config.seed, l as u64)))
            .collect();
        Ok(Self { layers, latent_index: config.latent_index, loss_scale: config.loss_scale })
    }

    pub fn encode(&self, x: &Matrix) -> Result<Matrix> {
        let mut h = x.clone();
        for l in &self.layers[..self.latent_index] {
            h = l.apply(&h)?;
        }
        Ok(h)
    }

    pub fn decode(&self, z: &Matrix) -> Result<Matrix> {
        let mut h = z.clone();
        for l in &self.layers[self.latent_index..] {
            h = l.apply(&h)?;
        }
        Ok(h)
    }

    pub fn reconstruct(&self, x: &Matrix) -> Result<Matrix> {
        self.decode(&self.encode(x)?)
    }

    pub fn loss(&self, x: &Matrix) -> Result<f64> {
        let rec = self.reconstruct(x)?;
        Ok(self.loss_of(x, &rec))
    }

    fn loss_of(&self, x: &Matrix, rec: &Matrix) -> f64 {
        let s: f64 = x.as_slice().iter().zip(rec.as_slice()).map(|(a, b)| (a - b) * (a - b)).sum();
        self.loss_scale * s / x.rows() as f64
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.n_params()).sum()
    }

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

    pub fn gradients(&self, x: &Matrix) -> Result<(f64, Vec<DenseGrads>)> {
        if x.cols() != self.layers[0].n_in {
            return Err(shape_err("AE input width"));
        }
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut h = x.clone();
        for l in &self.layers {
            let (out, cache) = l.forward(&h)?;
            caches.push(cache);
            h = out;
        }
        let value = self.loss_of(x, &h);
        let scale = 2.0 * self.loss_scale / x.rows() as f64;
        let mut up = h;
        up.as_mut_slice().iter_mut().zip(x.as_slice()).for_each(|(u, xv)| *u = scale * (*u - xv));
        let mut grads: Vec<Option<DenseGrads>> = vec![None; self.layers.len()];
        for (k, (l, c)) in self.layers.iter().zip(&caches).enumerate().rev() {
            let (g, down) = l.backward(c, &up)?;
            grads[k] = Some(g);
            up = down;
        }
        Ok((value, grads.into_iter().map(|g| g.expect("every layer visited")).collect()))
    }

    /// Full-batch gradient descent; returns the loss before each epoch.
    pub fn train(&mut self, x: &Matrix, config: &AeConfig) -> Result<Vec<f64>> {
        config.validate()?;
        let mut velocity: Vec<DenseGrads> = self
            .layers
            .iter()
            .map(|l| DenseGrads { weights: vec![0.0; l.weights.len()], biases: vec![0.0; l.biases.len()] })
            .collect();
        let mut history = Vec::with_capacity(config.epochs);
        let mut last = f64::NAN;
        for epoch in 0..config.epochs {
            let (value, grads) = self.gradients(x)?;
            if !value.is_finite() {
                return Err(Error::Divergence { epoch, last_finite_loss: last });
            }
            last = value;
            history.push(value);
            for ((layer, g), v) in self.layers.iter_mut().zip(&grads).zip(&mut velocity) {
                let mu = config.momentum;
                for ((w, gi), vi) in layer.weights.iter_mut().zip(&g.weights).zip(&mut v.weights) {
                    *vi = mu * *vi + gi;
                    *w -= config.lr * *vi;
                }
                for ((b, gi), vi) in layer.biases.iter_mut().zip(&g.biases).zip(&mut v.biases) {
                    *vi = mu * *vi + gi;
                    *b -= config.lr * *vi;
                }
            }
        }
        Ok(history)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random(n: usize, d: usize, seed: u64) -> Matrix {
        let mut s = rng::seeded(seed);
        Matrix::from_fn(n, d, |_, _| rng::normal(&mut s))
    }

    fn config(acts: &[Activation]) -> AeConfig {
        AeConfig {
            widths: vec![6, 4, 3, 4, 6][..acts.len() + 1].to_vec(),
            latent_index: 1,
            activations: acts.to_vec(),
            loss_scale: 0.2,
            lr: 0.05,
            epochs: 10,
            momentum: 0.0,
            seed: 3,
        }
    }

    #[test]
    fn zero_learning_rate_keeps_model() {
        let mut c = config(&[Activation::Tanh, Activation::Linear]);
        c.widths = vec![6, 4, 6];
        c.lr = 0.0;
        let mut m = AeModel::build(&c).unwrap();
        let before = m.clone();
        m.train(&random(5, 6, 1), &c).unwrap();
        assert_eq!(m, before);
    }

    #[test]
    fn dense_gradient_matches_finite_differences() {
        for act in [Activation::Tanh, Activation::Sigmoid, Activation::Linear] {
            let mut c = config(&[act, act, act, Activation::Linear]);
            c.latent_index = 2;
            let m = AeModel::build(&c).unwrap();
            let x = random(5, 6, 2);
            let (_, grads) = m.gradients(&x).unwrap();
            let flat: Vec<f64> = grads.iter().flat_map(|g| g.weights.iter().chain(&g.biases).copied()).collect();
            let h = 1e-6;
            for k in 0..m.n_params() {
                let mut p = m.clone();
                *p.param_mut(k) += h;
                let mut q = m.clone();
                *q.param_mut(k) -= h;
                let fd = (p.loss(&x).unwrap() - q.loss(&x).unwrap()) / (2.0 * h);
                let denom = fd.abs().max(flat[k].abs()).max(1e-7);
                assert!((fd - flat[k]).abs() / denom < 1e-5, "{act:?} param {k}: {fd} vs {}", flat[k]);
            }
        }
    }

    #[test]
    fn mirror_uses_bottleneck_of_latent_functions() {
        let b = BfaeConfig::autoencoder(10, 50, 4, 10);
        let a = AeConfig::mirror(&b);
        assert_eq!(a.widths, vec![500, 40, 500]);
        assert_eq!(a.latent_index, 1);
        let m = AeModel::build(&a).unwrap();
        assert_eq!(m.encode(&random(2, 500, 0)).unwrap().cols(), 40);
    }

    #[test]
    fn training_reduces_loss() {
        let mut c = config(&[Activation::Tanh, Activation::Linear]);
        c.widths = vec![6, 4, 6];
        c.epochs = 300;
        let mut m = AeModel::build(&c).unwrap();
        let h = m.train(&random(20, 6, 4), &c).unwrap();
        assert!(h[299] < h[0]);
    }
}
