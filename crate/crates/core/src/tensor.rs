use alloc::vec;
use alloc::vec::Vec;

use crate::error::{shape_err, Error, Result};

/// A batch of multivariate sampled functions: `n` samples × `features`
/// curves × `points` grid values, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionBatch {
    n: usize,
    features: usize,
    points: usize,
    data: Vec<f64>,
}

impl FunctionBatch {
    pub fn zeros(n: usize, features: usize, points: usize) -> Self {
        Self { n, features, points, data: vec![0.0; n * features * points] }
    }

    pub fn from_vec(n: usize, features: usize, points: usize, data: Vec<f64>) -> Result<Self> {
        let expected = n * features * points;
        if data.len() != expected {
            return Err(Error::LengthMismatch { expected, actual: data.len() });
        }
        Ok(Self { n, features, points, data })
    }

    pub fn from_fn(
        n: usize,
        features: usize,
        points: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Self {
        let mut data = Vec::with_capacity(n * features * points);
        for i in 0..n {
            for r in 0..features {
                for t in 0..points {
                    data.push(f(i, r, t));
                }
            }
        }
        Self { n, features, points, data }
    }

    /// Number of samples.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn features(&self) -> usize {
        self.features
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.n, self.features, self.points)
    }

    /// Flattened width of one sample (`features * points`).
    pub fn width(&self) -> usize {
        self.features * self.points
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, r: usize, t: usize) -> f64 {
        self.data[(i * self.features + r) * self.points + t]
    }

    #[inline]
    pub fn set(&mut self, i: usize, r: usize, t: usize, v: f64) {
        self.data[(i * self.features + r) * self.points + t] = v;
    }

    pub fn curve(&self, i: usize, r: usize) -> &[f64] {
        let start = (i * self.features + r) * self.points;
        &self.data[start..start + self.points]
    }

    pub fn curve_mut(&mut self, i: usize, r: usize) -> &mut [f64] {
        let start = (i * self.features + r) * self.points;
        &mut self.data[start..start + self.points]
    }

    /// All curves of sample `i`, concatenated feature by feature.
    pub fn sample(&self, i: usize) -> &[f64] {
        let w = self.width();
        &self.data[i * w..(i + 1) * w]
    }

    pub fn sample_mut(&mut self, i: usize) -> &mut [f64] {
        let w = self.width();
        &mut self.data[i * w..(i + 1) * w]
    }

    /// Copy of the samples at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Self {
        let w = self.width();
        let mut data = Vec::with_capacity(indices.len() * w);
        for &i in indices {
            data.extend_from_slice(self.sample(i));
        }
        Self { n: indices.len(), features: self.features, points: self.points, data }
    }

    pub fn check_shape(&self, other: &Self, context: &str) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(shape_err(context));
        }
        Ok(())
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}
