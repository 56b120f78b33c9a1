//! Functional PCA on a quadrature grid.
//!
//! For each feature the sample covariance operator is discretised as
//! `W^{1/2} C W^{1/2}` with `W = diag(q)`; its eigenvectors mapped back
//! through `W^{-1/2}` are eigenfunctions orthonormal under the quadrature
//! inner product. Multivariate data share one variance budget: eigenvalues of
//! all features are pooled and the largest ones kept until the target share
//! is reached.

use alloc::vec;
use alloc::vec::Vec;

use super::retained_count;
use crate::error::{shape_err, Error, Result};
use crate::grid::Grid;
use crate::linalg::{symmetric_eigen, Matrix};
use crate::math;
use crate::tensor::FunctionBatch;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBasis {
    pub mean: Vec<f64>,
    /// Retained eigenvalues, nonincreasing.
    pub eigenvalues: Vec<f64>,
    /// Retained eigenfunctions as columns, `M × K_r`.
    pub eigenfunctions: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FpcaModel {
    pub grid: Grid,
    pub features: Vec<FeatureBasis>,
}

struct FeatureEigen {
    mean: Vec<f64>,
    values: Vec<f64>,
    functions: Matrix,
}

fn feature_eigen(data: &FunctionBatch, r: usize, grid: &Grid) -> Result<FeatureEigen> {
    let (n, m) = (data.n(), data.points());
    let mut mean = vec![0.0; m];
    for i in 0..n {
        mean.iter_mut().zip(data.curve(i, r)).for_each(|(a, v)| *a += v);
    }
    mean.iter_mut().for_each(|a| *a /= n as f64);
    let sq: Vec<f64> = grid.weights().iter().map(|w| math::sqrt(*w)).collect();
    // rows: sqrt(q)·(x_i − mean)
    let xs = Matrix::from_fn(n, m, |i, t| sq[t] * (data.get(i, r, t) - mean[t]));
    let mut op = xs.t_matmul(&xs)?;
    op.as_mut_slice().iter_mut().for_each(|v| *v /= (n - 1) as f64);
    let eig = symmetric_eigen(&op)?;
    let functions = Matrix::from_fn(m, m, |t, k| eig.vectors[(t, k)] / sq[t]);
    Ok(FeatureEigen { mean, values: eig.values, functions })
}

impl FpcaModel {
    /// Fit with the pooled variance rule.
    pub fn fit(data: &FunctionBatch, grid: &Grid, variance_target: f64) -> Result<Self> {
        let eigs = Self::eigs(data, grid)?;
        let mut pooled: Vec<(f64, usize)> = eigs
            .iter()
            .enumerate()
            .flat_map(|(r, e)| e.values.iter().map(move |v| (*v, r)))
            .collect();
        // stable order: value descending, then feature index
        pooled.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let values: Vec<f64> = pooled.iter().map(|p| p.0).collect();
        let k = retained_count(&values, variance_target);
        let mut per_feature = vec![0usize; eigs.len()];
        for &(_, r) in &pooled[..k] {
            per_feature[r] += 1;
        }
        Ok(Self::assemble(grid, eigs, &per_feature))
    }

    /// Fit keeping exactly `counts[r]` eigenfunctions for feature `r`.
    pub fn fit_counts(data: &FunctionBatch, grid: &Grid, counts: &[usize]) -> Result<Self> {
        if counts.len() != data.features() {
            return Err(shape_err("one retained count per feature"));
        }
        let eigs = Self::eigs(data, grid)?;
        Ok(Self::assemble(grid, eigs, counts))
    }

    fn eigs(data: &FunctionBatch, grid: &Grid) -> Result<Vec<FeatureEigen>> {
        if data.n() < 2 {
            return Err(Error::InvalidParameter("FPCA needs at least 2 samples".into()));
        }
        if data.points() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), actual: data.points() });
        }
        if !data.all_finite() {
            return Err(Error::NonFinite("FPCA input".into()));
        }
        let eigs: Vec<FeatureEigen> =
            (0..data.features()).map(|r| feature_eigen(data, r, grid)).collect::<Result<_>>()?;
        let total: f64 = eigs.iter().flat_map(|e| e.values.iter()).map(|v| v.max(0.0)).sum();
        if !(total > 0.0) {
            return Err(Error::Degenerate("data have zero variance".into()));
        }
        Ok(eigs)
    }

    fn assemble(grid: &Grid, eigs: Vec<FeatureEigen>, counts: &[usize]) -> Self {
        let features = eigs
            .into_iter()
            .zip(counts)
            .map(|(e, &k)| {
                let k = k.min(e.values.len());
                let m = e.functions.rows();
                FeatureBasis {
                    mean: e.mean,
                    eigenvalues: e.values[..k].to_vec(),
                    eigenfunctions: Matrix::from_fn(m, k, |t, j| e.functions[(t, j)]),
                }
            })
            .collect();
        Self { grid: grid.clone(), features }
    }

    /// Total number of retained components across features.
    pub fn k(&self) -> usize {
        self.features.iter().map(|f| f.eigenvalues.len()).sum()
    }

    pub fn counts(&self) -> Vec<usize> {
        self.features.iter().map(|f| f.eigenvalues.len()).collect()
    }

    fn check(&self, data: &FunctionBatch) -> Result<()> {
        if data.features() != self.features.len() || data.points() != self.grid.len() {
            return Err(shape_err("fpca: batch shape does not match the model"));
        }
        Ok(())
    }

    /// Scores `⟨x_r − μ_r, φ_{r,k}⟩`, concatenated feature by feature:
    /// an `N × K` matrix.
    pub fn encode(&self, data: &FunctionBatch) -> Result<Matrix> {
        self.check(data)?;
        let q = self.grid.weights();
        let mut scores = Matrix::zeros(data.n(), self.k());
        for i in 0..data.n() {
            let mut col = 0;
            for (r, f) in self.features.iter().enumerate() {
                let centered: Vec<f64> =
                    data.curve(i, r).iter().zip(&f.mean).zip(q).map(|((x, m), w)| w * (x - m)).collect();
                for k in 0..f.eigenvalues.len() {
                    scores[(i, col)] =
                        (0..centered.len()).map(|t| centered[t] * f.eigenfunctions[(t, k)]).sum();
                    col += 1;
                }
            }
        }
        Ok(scores)
    }

    /// `μ_r + Σ_k score·φ_{r,k}` for every feature.
    pub fn decode(&self, scores: &Matrix) -> Result<FunctionBatch> {
        if scores.cols() != self.k() {
            return Err(shape_err("fpca decode: score width must equal K"));
        }
        let m = self.grid.len();
        let mut out = FunctionBatch::zeros(scores.rows(), self.features.len(), m);
        for i in 0..scores.rows() {
            let mut col = 0;
            for (r, f) in self.features.iter().enumerate() {
                let curve = out.curve_mut(i, r);
                curve.copy_from_slice(&f.mean);
                for k in 0..f.eigenvalues.len() {
                    let s = scores[(i, col)];
                    for (t, c) in curve.iter_mut().enumerate() {
                        *c += s * f.eigenfunctions[(t, k)];
                    }
                    col += 1;
                }
            }
        }
        Ok(out)
    }

    pub fn reconstruct(&self, data: &FunctionBatch) -> Result<FunctionBatch> {
        self.decode(&self.encode(data)?)
    }
}
