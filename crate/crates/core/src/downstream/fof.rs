//! Function-on-function linear regression:
//! `ŷ_{i,r'}(s) = α_{r'}(s) + Σ_r ∫ β_{r,r'}(s,t) x_{i,r}(t) dt`.
//!
//! Each output point is an independent ridge problem sharing one design
//! matrix, so a single Cholesky factor serves every `(r', s)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{shape_err, Error, Result};
use crate::grid::Grid;
use crate::linalg::{cholesky, cholesky_solve, gemm, MatMut, MatRef, Matrix};
use crate::tensor::FunctionBatch;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FoFRegression {
    pub in_grid: Grid,
    pub out_grid: Grid,
    pub in_features: usize,
    pub out_features: usize,
    /// `α_{r'}(s)`, `R_out × M_out`.
    pub intercepts: Vec<f64>,
    /// `β_{r,r'}(s,t)` as a row-major `(R_out·M_out) × (R_in·M_in)` matrix.
    pub surfaces: Vec<f64>,
    pub ridge: f64,
}

impl FoFRegression {
    /// Minimises, for every output point,
    /// `(1/N) Σ_i (y_i(s) − ŷ_i(s))² + ridge · Σ_r ∫ β_{r,r'}(s,t)² dt`.
    pub fn fit(
        inputs: &FunctionBatch,
        outputs: &FunctionBatch,
        in_grid: &Grid,
        out_grid: &Grid,
        ridge: f64,
    ) -> Result<Self> {
        let n = inputs.n();
        if n < 2 {
            return Err(Error::InvalidParameter("need at least two samples".into()));
        }
        if outputs.n() != n {
            return Err(Error::LengthMismatch { expected: n, actual: outputs.n() });
        }
        if inputs.points() != in_grid.len() || outputs.points() != out_grid.len() {
            return Err(shape_err("regression grids"));
        }
        if !(ridge > 0.0) || !ridge.is_finite() {
            return Err(Error::InvalidParameter("ridge must be positive".into()));
        }
        let (p, d) = (inputs.width(), outputs.width());
        let m_in = in_grid.len();
        let q = in_grid.weights();
        let nf = n as f64;

        let mut x_mean = vec![0.0; p];
        let mut y_mean = vec![0.0; d];
        for i in 0..n {
            x_mean.iter_mut().zip(inputs.sample(i)).for_each(|(m, v)| *m += v / nf);
            y_mean.iter_mut().zip(outputs.sample(i)).for_each(|(m, v)| *m += v / nf);
        }
        // Centred design with quadrature folded in: a_{ik} = q_t (x_{ik} − x̄_k).
        let mut a = Matrix::zeros(n, p);
        let mut yc = Matrix::zeros(n, d);
        for i in 0..n {
            for (k, (v, m)) in inputs.sample(i).iter().zip(&x_mean).enumerate() {
                a[(i, k)] = q[k % m_in] * (v - m);
            }
            for (k, (v, m)) in outputs.sample(i).iter().zip(&y_mean).enumerate() {
                yc[(i, k)] = v - m;
            }
        }
        let mut gram = Matrix::zeros(p, p);
        gemm(
            p,
            n,
            p,
            1.0 / nf,
            MatRef::col_major(a.as_slice(), p),
            MatRef::row_major(a.as_slice(), p),
            0.0,
            MatMut::row_major(gram.as_mut_slice(), p),
        );
        for k in 0..p {
            gram[(k, k)] += ridge * q[k % m_in];
        }
        let mut rhs = Matrix::zeros(p, d);
        gemm(
            p,
            n,
            d,
            1.0 / nf,
            MatRef::col_major(a.as_slice(), p),
            MatRef::row_major(yc.as_slice(), d),
            0.0,
            MatMut::row_major(rhs.as_mut_slice(), d),
        );
        let l = cholesky(&gram).ok_or(Error::CholeskyFailure { jitter: 0.0 })?;
        // p × d coefficients; column c is β for output point c.
        let beta = cholesky_solve(&l, &rhs);
        let surfaces = beta.transpose().into_vec();
        let intercepts = (0..d)
            .map(|c| y_mean[c] - (0..p).map(|k| surfaces[c * p + k] * q[k % m_in] * x_mean[k]).sum::<f64>())
            .collect();
        Ok(Self {
            in_grid: in_grid.clone(),
            out_grid: out_grid.clone(),
            in_features: inputs.features(),
            out_features: outputs.features(),
            intercepts,
            surfaces,
            ridge,
        })
    }

    pub fn predict(&self, inputs: &FunctionBatch) -> Result<FunctionBatch> {
        if inputs.features() != self.in_features || inputs.points() != self.in_grid.len() {
            return Err(shape_err("regression input"));
        }
        let n = inputs.n();
        let p = inputs.width();
        let d = self.intercepts.len();
        let m_in = self.in_grid.len();
        let q = self.in_grid.weights();
        let weighted: Vec<f64> = inputs.as_slice().iter().enumerate().map(|(k, v)| v * q[k % m_in]).collect();
        let mut out = Vec::with_capacity(n * d);
        for _ in 0..n {
            out.extend_from_slice(&self.intercepts);
        }
        gemm(
            n,
            p,
            d,
            1.0,
            MatRef::row_major(&weighted, p),
            MatRef::col_major(&self.surfaces, p),
            1.0,
            MatMut::row_major(&mut out, d),
        );
        FunctionBatch::from_vec(n, self.out_features, self.out_grid.len(), out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::downstream::metrics::functional_rmse;
    use crate::rng;

    fn random(n: usize, r: usize, m: usize, seed: u64) -> FunctionBatch {
        let mut s = rng::seeded(seed);
        FunctionBatch::from_fn(n, r, m, |_, _, _| rng::normal(&mut s))
    }

    #[test]
    fn zero_outputs_give_zero_coefficients() {
        let g = Grid::uniform(0.0, 1.0, 6).unwrap();
        let x = random(20, 2, 6, 1);
        let y = FunctionBatch::zeros(20, 1, 6);
        let f = FoFRegression::fit(&x, &y, &g, &g, 1e-3).unwrap();
        assert!(f.surfaces.iter().chain(&f.intercepts).all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn recovers_known_surface() {
        let (n, r, m) = (80, 2, 6);
        let g = Grid::uniform(0.0, 1.0, m).unwrap();
        let x = random(n, r, m, 2);
        let mut s = rng::seeded(3);
        let beta: Vec<f64> = (0..m * r * m).map(|_| rng::normal(&mut s)).collect();
        let alpha: Vec<f64> = (0..m).map(|k| k as f64 * 0.1).collect();
        let q = g.weights();
        let y = FunctionBatch::from_fn(n, 1, m, |i, _, sidx| {
            alpha[sidx]
                + (0..r * m).map(|k| beta[sidx * r * m + k] * q[k % m] * x.sample(i)[k]).sum::<f64>()
        });
        let f = FoFRegression::fit(&x, &y, &g, &g, 1e-10).unwrap();
        let pred = f.predict(&x).unwrap();
        assert!(functional_rmse(&y, &pred, &g).unwrap() < 1e-3);
        let fresh = random(10, r, m, 4);
        let y_fresh = FunctionBatch::from_fn(10, 1, m, |i, _, sidx| {
            alpha[sidx]
                + (0..r * m).map(|k| beta[sidx * r * m + k] * q[k % m] * fresh.sample(i)[k]).sum::<f64>()
        });
        assert!(functional_rmse(&y_fresh, &f.predict(&fresh).unwrap(), &g).unwrap() < 1e-3);
    }

    #[test]
    fn nonpositive_ridge_is_rejected() {
        let g = Grid::uniform(0.0, 1.0, 4).unwrap();
        let x = random(5, 1, 4, 5);
        assert!(FoFRegression::fit(&x, &x, &g, &g, 0.0).is_err());
    }
}
