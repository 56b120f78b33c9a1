//! Timepoint grids on a compact interval and the trapezoidal quadrature that
//! stands in for every integral in the model.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Sorted timepoints on `[a, b]` with composite trapezoidal weights.
///
/// The first point is `a`, the last is `b`; weights are strictly positive and
/// sum to `b - a`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Grid {
    interval: [f64; 2],
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl Grid {
    /// `m` equally spaced points on `[a, b]`.
    pub fn uniform(a: f64, b: f64, m: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && b > a) {
            return Err(Error::InvalidInterval { a, b });
        }
        if m < 2 {
            return Err(Error::TooFewPoints(m));
        }
        let h = (b - a) / (m - 1) as f64;
        let mut points: Vec<f64> = (0..m).map(|i| a + i as f64 * h).collect();
        points[m - 1] = b;
        Self::from_points(points)
    }

    /// Grid on arbitrary strictly increasing points; the interval is
    /// `[points[0], points[m-1]]`.
    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        let m = points.len();
        if m < 2 {
            return Err(Error::TooFewPoints(m));
        }
        for (i, p) in points.iter().enumerate() {
            if !p.is_finite() || (i > 0 && *p <= points[i - 1]) {
                return Err(Error::UnsortedGrid(i));
            }
        }
        let weights = trapezoid_weights(&points);
        Ok(Self { interval: [points[0], points[m - 1]], points, weights })
    }

    /// Degenerate one-point grid at the midpoint of `[a, b]` carrying the
    /// whole interval length as its weight. Functions on it are constants,
    /// which is how scalar latent codes are represented.
    pub fn single_point(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && b > a) {
            return Err(Error::InvalidInterval { a, b });
        }
        Ok(Self { interval: [a, b], points: alloc::vec![0.5 * (a + b)], weights: alloc::vec![b - a] })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// Always false; a grid has at least one point.
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn start(&self) -> f64 {
        self.interval[0]
    }

    pub fn end(&self) -> f64 {
        self.interval[1]
    }

    pub fn length(&self) -> f64 {
        self.end() - self.start()
    }

    /// True when both grids cover the same interval.
    pub fn same_interval(&self, other: &Grid) -> bool {
        self.start() == other.start() && self.end() == other.end()
    }

    /// Trapezoidal approximation of the integral of `values` over the grid.
    pub fn integrate(&self, values: &[f64]) -> Result<f64> {
        self.check_len(values.len())?;
        Ok(self.integrate_unchecked(values))
    }

    /// L² inner product of two sampled functions.
    pub fn inner_product(&self, f: &[f64], g: &[f64]) -> Result<f64> {
        self.check_len(f.len())?;
        self.check_len(g.len())?;
        Ok(f.iter().zip(g).zip(&self.weights).map(|((a, b), w)| w * (a * b)).sum())
    }

    pub(crate) fn integrate_unchecked(&self, values: &[f64]) -> f64 {
        values.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }

    /// Piecewise-linear interpolation of `values` (sampled on `self`) at the
    /// points of `target`.
    pub fn resample(&self, values: &[f64], target: &Grid) -> Result<Vec<f64>> {
        self.resample_at(values, target.points())
    }

    pub fn resample_at(&self, values: &[f64], at: &[f64]) -> Result<Vec<f64>> {
        self.check_len(values.len())?;
        let (a, b) = (self.start(), self.end());
        let m = self.len();
        at.iter()
            .map(|&x| {
                if !(x >= a && x <= b) {
                    return Err(Error::OutOfRange(x));
                }
                // index of the first point strictly greater than x
                let hi = self.points.partition_point(|&p| p <= x);
                if m == 1 || hi == 0 {
                    return Ok(values[0]);
                }
                if hi >= m {
                    return Ok(values[m - 1]);
                }
                let lo = hi - 1;
                let (x0, x1) = (self.points[lo], self.points[hi]);
                let u = (x - x0) / (x1 - x0);
                Ok(values[lo] + u * (values[hi] - values[lo]))
            })
            .collect()
    }

    fn check_len(&self, actual: usize) -> Result<()> {
        if actual != self.len() {
            return Err(Error::LengthMismatch { expected: self.len(), actual });
        }
        Ok(())
    }
}

/// Composite trapezoidal weights for sorted points.
pub fn trapezoid_weights(points: &[f64]) -> Vec<f64> {
    let m = points.len();
    let mut w = alloc::vec![0.0; m];
    for i in 0..m.saturating_sub(1) {
        let half = 0.5 * (points[i + 1] - points[i]);
        w[i] += half;
        w[i + 1] += half;
    }
    w
}
