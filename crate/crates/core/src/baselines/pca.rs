use alloc::vec::Vec;

use super::retained_count;
use crate::error::{shape_err, Error, Result};
use crate::linalg::{symmetric_eigen, Matrix};
use crate::math;
use crate::tensor::FunctionBatch;

/// Principal components of flattened samples.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `D × K`, orthonormal columns.
    pub components: Matrix,
    /// Explained-variance ratio of every retained component.
    pub explained_ratio: Vec<f64>,
    /// Variance along every retained component.
    pub eigenvalues: Vec<f64>,
}

/// Flatten a batch into an `N × (R·M)` matrix.
pub fn flatten(batch: &FunctionBatch) -> Matrix {
    Matrix::from_vec(batch.n(), batch.width(), batch.as_slice().to_vec()).expect("shape is consistent")
}

impl PcaModel {
    /// Fit on rows of `data`, keeping the fewest components that explain at
    /// least `variance_target` of the total variance.
    pub fn fit(data: &Matrix, variance_target: f64) -> Result<Self> {
        let (values, vectors) = eigen_pairs(data)?;
        let k = retained_count(&values, variance_target);
        Self::from_pairs(data, &values, &vectors, k)
    }

    /// Fit keeping exactly `k` components (capped at the available rank).
    pub fn fit_k(data: &Matrix, k: usize) -> Result<Self> {
        let (values, vectors) = eigen_pairs(data)?;
        Self::from_pairs(data, &values, &vectors, k.min(values.len()))
    }

    fn from_pairs(data: &Matrix, values: &[f64], vectors: &Matrix, k: usize) -> Result<Self> {
        let total: f64 = values.iter().map(|v| v.max(0.0)).sum();
        let d = data.cols();
        let components = Matrix::from_fn(d, k, |i, j| vectors[(i, j)]);
        Ok(Self {
            mean: column_means(data),
            components,
            explained_ratio: values[..k].iter().map(|v| v.max(0.0) / total).collect(),
            eigenvalues: values[..k].to_vec(),
        })
    }

    pub fn k(&self) -> usize {
        self.components.cols()
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// `(x − mean)·components`.
    pub fn encode(&self, data: &Matrix) -> Result<Matrix> {
        if data.cols() != self.dim() {
            return Err(shape_err("pca encode: dimension mismatch"));
        }
        let mut centered = data.clone();
        for i in 0..centered.rows() {
            centered.row_mut(i).iter_mut().zip(&self.mean).for_each(|(v, m)| *v -= m);
        }
        centered.matmul(&self.components)
    }

    /// `mean + scores·componentsᵀ`.
    pub fn decode(&self, scores: &Matrix) -> Result<Matrix> {
        if scores.cols() != self.k() {
            return Err(shape_err("pca decode: score width must equal K"));
        }
        let mut out = scores.matmul(&self.components.transpose())?;
        for i in 0..out.rows() {
            out.row_mut(i).iter_mut().zip(&self.mean).for_each(|(v, m)| *v += m);
        }
        Ok(out)
    }

    pub fn reconstruct(&self, data: &Matrix) -> Result<Matrix> {
        self.decode(&self.encode(data)?)
    }

    /// Reconstruct a batch of curves through the flattened projection.
    pub fn reconstruct_batch(&self, batch: &FunctionBatch) -> Result<FunctionBatch> {
        let rec = self.reconstruct(&flatten(batch))?;
        FunctionBatch::from_vec(batch.n(), batch.features(), batch.points(), rec.into_vec())
    }
}

fn column_means(data: &Matrix) -> Vec<f64> {
    let n = data.rows() as f64;
    let mut mean = alloc::vec![0.0; data.cols()];
    for i in 0..data.rows() {
        mean.iter_mut().zip(data.row(i)).for_each(|(m, v)| *m += v);
    }
    mean.iter_mut().for_each(|m| *m /= n);
    mean
}

/// Eigenpairs of the sample covariance, nonincreasing, limited to the
/// `min(N − 1, D)` directions the data can span. When `N − 1 < D` the
/// `N × N` Gram matrix is decomposed instead and its eigenvectors mapped back.
fn eigen_pairs(data: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    let (n, d) = (data.rows(), data.cols());
    if n < 2 {
        return Err(Error::InvalidParameter("PCA needs at least 2 samples".into()));
    }
    if data.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("PCA input".into()));
    }
    let mean = column_means(data);
    let mut xc = data.clone();
    for i in 0..n {
        xc.row_mut(i).iter_mut().zip(&mean).for_each(|(v, m)| *v -= m);
    }
    let denom = (n - 1) as f64;
    let rank = (n - 1).min(d);
    let (values, vectors) = if d <= n - 1 {
        let mut cov = xc.t_matmul(&xc)?;
        cov.as_mut_slice().iter_mut().for_each(|v| *v /= denom);
        let eig = symmetric_eigen(&cov)?;
        (eig.values, eig.vectors)
    } else {
        let mut gram = xc.matmul(&xc.transpose())?;
        gram.as_mut_slice().iter_mut().for_each(|v| *v /= denom);
        let eig = symmetric_eigen(&gram)?;
        // v_k = Xcᵀ u_k / sqrt((n−1)·λ_k)
        let mapped = xc.t_matmul(&eig.vectors)?;
        let mut vectors = Matrix::zeros(d, rank);
        for k in 0..rank {
            let lam = eig.values[k];
            if lam <= 0.0 {
                continue;
            }
            let s = 1.0 / math::sqrt(denom * lam);
            for i in 0..d {
                vectors[(i, k)] = mapped[(i, k)] * s;
            }
        }
        (eig.values, vectors)
    };
    let values: Vec<f64> = values.into_iter().take(rank).collect();
    let total: f64 = values.iter().map(|v| v.max(0.0)).sum();
    if !(total > 0.0) {
        return Err(Error::Degenerate("data have zero variance".into()));
    }
    // drop numerically null directions so the returned basis stays orthonormal
    let tol = total * 1e-13;
    let keep = values.iter().take_while(|v| **v > tol).count().max(1);
    let vectors = Matrix::from_fn(d, keep, |i, j| vectors[(i, j)]);
    Ok((values[..keep].to_vec(), vectors))
}
