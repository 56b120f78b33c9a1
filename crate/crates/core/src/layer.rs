//! The continuous layer: a bank of integral operators with learnable weight
//! surfaces and bias functions.
//!
//! For sample `i` and outgoing neuron `r`, evaluated at output point `s`:
//!
//! ```text
//! H[i][r](s) = σ( b[r](s) + Σ_j ∫ w[r][j](s, t) · X[i][j](t) dt )
//! ```
//!
//! with the integral taken by trapezoidal quadrature on the input grid. Each
//! `(r, j)` block is a GEMM between the quadrature-scaled inputs and the
//! weight surface.

use alloc::vec;
use alloc::vec::Vec;

use crate::activation::Activation;
use crate::error::{shape_err, Error, Result};
use crate::grid::Grid;
use crate::linalg::{gemm, MatMut, MatRef};
use crate::math;
use crate::rng;
use crate::tensor::FunctionBatch;

/// How weight surfaces are initialised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum InitScheme {
    /// Uniform on `[-c, c]`, `c = sqrt(6 / (j_in·|S| + j_out·|S|)) / |S|`
    /// where `|S|` is the interval length.
    #[default]
    Continuum,
    /// Glorot-uniform on the quadrature-weighted matrix `w(s,t)·q(t)`:
    /// `c = sqrt(6 / (j_in·M_in + j_out·M_out)) · (M_in − 1) / |S|`.
    Glorot,
    /// All zeros.
    Zeros,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousLayer {
    pub in_grid: Grid,
    pub out_grid: Grid,
    pub j_in: usize,
    pub j_out: usize,
    /// Row-major `j_out × j_in × M_out × M_in`.
    pub weights: Vec<f64>,
    /// Row-major `j_out × M_out`.
    pub biases: Vec<f64>,
    pub activation: Activation,
}

/// Values saved by [`ContinuousLayer::forward`] for the backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerCache {
    /// Bracketed term before the activation, `batch × j_out × M_out`.
    pub pre_activation: FunctionBatch,
    /// Layer input, `batch × j_in × M_in`.
    pub input: FunctionBatch,
}

/// Gradients with the same layout as the layer parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrads {
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl LayerGrads {
    pub fn zeros_like(layer: &ContinuousLayer) -> Self {
        Self { weights: vec![0.0; layer.weights.len()], biases: vec![0.0; layer.biases.len()] }
    }

    pub fn scale(&mut self, c: f64) {
        self.weights.iter_mut().chain(self.biases.iter_mut()).for_each(|g| *g *= c);
    }
}

impl ContinuousLayer {
    /// Layer with zero parameters.
    pub fn zeros(
        in_grid: Grid,
        out_grid: Grid,
        j_in: usize,
        j_out: usize,
        activation: Activation,
    ) -> Result<Self> {
        if j_in == 0 || j_out == 0 {
            return Err(Error::InvalidParameter("neuron counts must be >= 1".into()));
        }
        if !in_grid.same_interval(&out_grid) {
            return Err(Error::InvalidParameter("input and output grids must share an interval".into()));
        }
        let weights = vec![0.0; j_out * j_in * out_grid.len() * in_grid.len()];
        let biases = vec![0.0; j_out * out_grid.len()];
        Ok(Self { in_grid, out_grid, j_in, j_out, weights, biases, activation })
    }

    /// Randomly initialised layer; biases start at zero.
    pub fn init(
        in_grid: Grid,
        out_grid: Grid,
        j_in: usize,
        j_out: usize,
        activation: Activation,
        scheme: InitScheme,
        seed: u64,
    ) -> Result<Self> {
        let mut layer = Self::zeros(in_grid, out_grid, j_in, j_out, activation)?;
        let len = layer.in_grid.length();
        let c = match scheme {
            InitScheme::Continuum => math::sqrt(6.0 / ((j_in + j_out) as f64 * len)) / len,
            InitScheme::Glorot => {
                let fan = (j_in * layer.m_in() + j_out * layer.m_out()) as f64;
                math::sqrt(6.0 / fan) * (layer.m_in() - 1) as f64 / len
            }
            InitScheme::Zeros => return Ok(layer),
        };
        let mut stream = rng::seeded(seed);
        for w in layer.weights.iter_mut() {
            *w = rng::uniform(&mut stream, -c, c);
        }
        Ok(layer)
    }

    pub fn m_in(&self) -> usize {
        self.in_grid.len()
    }

    pub fn m_out(&self) -> usize {
        self.out_grid.len()
    }

    pub fn n_params(&self) -> usize {
        self.weights.len() + self.biases.len()
    }

    /// Offset of the weight surface `(r, j)` in `weights`.
    #[inline]
    pub fn surface_offset(&self, r: usize, j: usize) -> usize {
        (r * self.j_in + j) * self.m_out() * self.m_in()
    }

    #[inline]
    pub fn weight(&self, r: usize, j: usize, s: usize, t: usize) -> f64 {
        self.weights[self.surface_offset(r, j) + s * self.m_in() + t]
    }

    #[inline]
    pub fn bias(&self, r: usize, s: usize) -> f64 {
        self.biases[r * self.m_out() + s]
    }

    pub fn validate(&self) -> Result<()> {
        let (mi, mo) = (self.m_in(), self.m_out());
        if self.weights.len() != self.j_out * self.j_in * mo * mi {
            return Err(shape_err("weight surfaces must be j_out × j_in × M_out × M_in"));
        }
        if self.biases.len() != self.j_out * mo {
            return Err(shape_err("biases must be j_out × M_out"));
        }
        if self.weights.iter().chain(&self.biases).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("layer parameters".into()));
        }
        Ok(())
    }

    fn check_input(&self, input: &FunctionBatch) -> Result<()> {
        if input.features() != self.j_in || input.points() != self.m_in() {
            return Err(shape_err("layer input must be batch × j_in × M_in"));
        }
        if !input.all_finite() {
            return Err(Error::NonFinite("layer input".into()));
        }
        Ok(())
    }

    /// Input with every value multiplied by the quadrature weight of its point.
    fn quadrature_scaled(&self, input: &FunctionBatch) -> FunctionBatch {
        let mut xq = input.clone();
        let q = self.in_grid.weights();
        for chunk in xq.as_mut_slice().chunks_exact_mut(q.len()) {
            chunk.iter_mut().zip(q).for_each(|(v, w)| *v *= w);
        }
        xq
    }

    fn pre_activation(&self, input: &FunctionBatch) -> FunctionBatch {
        let n = input.n();
        let (mi, mo) = (self.m_in(), self.m_out());
        let (ji, jo) = (self.j_in, self.j_out);
        let xq = self.quadrature_scaled(input);
        let mut pre = FunctionBatch::zeros(n, jo, mo);
        for i in 0..n {
            pre.sample_mut(i).copy_from_slice(&self.biases);
        }
        for r in 0..jo {
            for j in 0..ji {
                let w = &self.weights[self.surface_offset(r, j)..][..mo * mi];
                gemm(
                    n,
                    mi,
                    mo,
                    1.0,
                    MatRef::strided(&xq.as_slice()[j * mi..], ji * mi, 1),
                    MatRef::strided(w, 1, mi),
                    1.0,
                    MatMut::strided(&mut pre.as_mut_slice()[r * mo..], jo * mo, 1),
                );
            }
        }
        pre
    }

    fn activate(&self, pre: &FunctionBatch) -> FunctionBatch {
        let mut out = pre.clone();
        let act = self.activation;
        out.as_mut_slice().iter_mut().for_each(|v| *v = act.apply(*v));
        out
    }

    /// Forward pass returning the output and the cache for [`Self::backward`].
    pub fn forward(&self, input: &FunctionBatch) -> Result<(FunctionBatch, LayerCache)> {
        self.check_input(input)?;
        let pre = self.pre_activation(input);
        let out = self.activate(&pre);
        Ok((out, LayerCache { pre_activation: pre, input: input.clone() }))
    }

    /// Forward pass without keeping a cache.
    pub fn apply(&self, input: &FunctionBatch) -> Result<FunctionBatch> {
        self.check_input(input)?;
        Ok(self.activate(&self.pre_activation(input)))
    }

    /// Exact gradients of the discretised forward map.
    ///
    /// With `δ = upstream ⊙ σ'(pre)`:
    /// `∂b[r](s) = Σ_i δ[i][r](s)`,
    /// `∂w[r][j](s,t) = Σ_i δ[i][r](s)·q(t)·X[i][j](t)` and
    /// `∂X[i][j](t) = q(t)·Σ_r Σ_s δ[i][r](s)·w[r][j](s,t)`.
    pub fn backward(
        &self,
        cache: &LayerCache,
        upstream: &FunctionBatch,
    ) -> Result<(LayerGrads, FunctionBatch)> {
        let n = cache.input.n();
        let (mi, mo) = (self.m_in(), self.m_out());
        let (ji, jo) = (self.j_in, self.j_out);
        if cache.input.shape() != (n, ji, mi) || cache.pre_activation.shape() != (n, jo, mo) {
            return Err(shape_err("stale cache: shapes do not match the layer"));
        }
        if upstream.shape() != (n, jo, mo) {
            return Err(shape_err("upstream gradient must be batch × j_out × M_out"));
        }
        let act = self.activation;
        let mut delta = upstream.clone();
        for (d, p) in delta.as_mut_slice().iter_mut().zip(cache.pre_activation.as_slice()) {
            *d *= act.derivative(*p);
        }

        let mut grads = LayerGrads::zeros_like(self);
        for i in 0..n {
            grads.biases.iter_mut().zip(delta.sample(i)).for_each(|(g, d)| *g += d);
        }

        let xq = self.quadrature_scaled(&cache.input);
        let mut grad_input = FunctionBatch::zeros(n, ji, mi);
        for r in 0..jo {
            let d_r = &delta.as_slice()[r * mo..];
            for j in 0..ji {
                let off = self.surface_offset(r, j);
                // ∂w_rj = δ_rᵀ · xq_j   (M_out × N)·(N × M_in)
                gemm(
                    mo,
                    n,
                    mi,
                    1.0,
                    MatRef::strided(d_r, 1, jo * mo),
                    MatRef::strided(&xq.as_slice()[j * mi..], ji * mi, 1),
                    0.0,
                    MatMut::row_major(&mut grads.weights[off..off + mo * mi], mi),
                );
                // ∂X_j += δ_r · w_rj   (N × M_out)·(M_out × M_in)
                gemm(
                    n,
                    mo,
                    mi,
                    1.0,
                    MatRef::strided(d_r, jo * mo, 1),
                    MatRef::row_major(&self.weights[off..off + mo * mi], mi),
                    1.0,
                    MatMut::strided(&mut grad_input.as_mut_slice()[j * mi..], ji * mi, 1),
                );
            }
        }
        let q = self.in_grid.weights();
        for chunk in grad_input.as_mut_slice().chunks_exact_mut(mi) {
            chunk.iter_mut().zip(q).for_each(|(g, w)| *g *= w);
        }
        Ok((grads, grad_input))
    }

    /// Plain gradient step: `θ ← θ − (lr / batch_size)·∇θ`.
    pub fn sgd_step(&mut self, grads: &LayerGrads, lr: f64, batch_size: usize) -> Result<()> {
        if grads.weights.len() != self.weights.len() || grads.biases.len() != self.biases.len() {
            return Err(shape_err("gradient shapes do not match the layer"));
        }
        if !(lr >= 0.0) || batch_size == 0 {
            return Err(Error::InvalidParameter("lr must be >= 0 and batch_size >= 1".into()));
        }
        let step = lr / batch_size as f64;
        self.weights.iter_mut().zip(&grads.weights).for_each(|(w, g)| *w -= step * g);
        self.biases.iter_mut().zip(&grads.biases).for_each(|(b, g)| *b -= step * g);
        Ok(())
    }

    /// Convert Euclidean parameter gradients into L² (function-space)
    /// gradients by dividing out the quadrature weights: weight entries by
    /// `q_out(s)·q_in(t)`, bias entries by `q_out(s)`.
    pub fn to_function_space(&self, grads: &mut LayerGrads) {
        let (mi, mo) = (self.m_in(), self.m_out());
        let qi = self.in_grid.weights();
        let qo = self.out_grid.weights();
        for surface in grads.weights.chunks_exact_mut(mo * mi) {
            for (s, row) in surface.chunks_exact_mut(mi).enumerate() {
                row.iter_mut().zip(qi).for_each(|(g, wt)| *g /= qo[s] * wt);
            }
        }
        for row in grads.biases.chunks_exact_mut(mo) {
            row.iter_mut().zip(qo).for_each(|(g, w)| *g /= w);
        }
    }

    /// Parameters flattened as `[weights..., biases...]`.
    pub fn params(&self) -> impl Iterator<Item = &f64> {
        self.weights.iter().chain(self.biases.iter())
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
