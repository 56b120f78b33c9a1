//! Functional logistic classifier: `logit p_i = α + Σ_r ∫ β_r(t) x_{i,r}(t) dt`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{shape_err, Error, Result};
use crate::grid::Grid;
use crate::linalg::{cholesky, cholesky_solve, Matrix};
use crate::math;
use crate::tensor::FunctionBatch;

/// Newton settings for [`FlmClassifier::fit`].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FlmFitOptions {
    pub ridge: f64,
    pub max_iter: usize,
    /// Stop once half the squared Newton decrement falls below this.
    pub tolerance: f64,
    /// First step length tried along each Newton direction.
    pub initial_step: f64,
}

impl Default for FlmFitOptions {
    fn default() -> Self {
        Self { ridge: 1e-3, max_iter: 100, tolerance: 1e-12, initial_step: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FlmClassifier {
    pub grid: Grid,
    /// `β_r(t)` stored feature-major, `R·M` values.
    pub beta: Vec<f64>,
    pub intercept: f64,
    pub features: usize,
    /// Objective value after each accepted step.
    pub loss_trace: Vec<f64>,
}

fn log1p_exp(z: f64) -> f64 {
    if z > 0.0 {
        z + math::ln(1.0 + math::exp(-z))
    } else {
        math::ln(1.0 + math::exp(z))
    }
}

struct Problem<'a> {
    x: &'a FunctionBatch,
    y: Vec<f64>,
    q: &'a [f64],
    ridge: f64,
}

impl Problem<'_> {
    fn logits(&self, alpha: f64, beta: &[f64]) -> Vec<f64> {
        let m = self.q.len();
        (0..self.x.n())
            .map(|i| {
                let xi = self.x.sample(i);
                alpha
                    + xi.iter()
                        .zip(beta)
                        .enumerate()
                        .map(|(k, (x, b))| self.q[k % m] * x * b)
                        .sum::<f64>()
            })
            .collect()
    }

    /// Mean negative log-likelihood plus `ridge·Σ_r ∫β_r²`.
    fn objective(&self, alpha: f64, beta: &[f64]) -> f64 {
        let m = self.q.len();
        let z = self.logits(alpha, beta);
        let nll: f64 =
            z.iter().zip(&self.y).map(|(z, y)| log1p_exp(*z) - y * z).sum::<f64>() / self.y.len() as f64;
        let pen: f64 = beta.iter().enumerate().map(|(k, b)| self.q[k % m] * b * b).sum();
        nll + self.ridge * pen
    }

    /// Gradient and Hessian in the coordinates `(α, β_1, …, β_{RM})`.
    fn derivatives(&self, alpha: f64, beta: &[f64]) -> (Vec<f64>, Matrix) {
        let m = self.q.len();
        let p = beta.len() + 1;
        let n = self.y.len() as f64;
        let z = self.logits(alpha, beta);
        let mut g = vec![0.0; p];
        let mut h = Matrix::zeros(p, p);
        let mut a = vec![0.0; p];
        a[0] = 1.0;
        for (i, (zi, yi)) in z.iter().zip(&self.y).enumerate() {
            for (k, x) in self.x.sample(i).iter().enumerate() {
                a[k + 1] = self.q[k % m] * x;
            }
            let pi = math::sigmoid(*zi);
            let (r, w) = ((pi - yi) / n, pi * (1.0 - pi) / n);
            for (gk, ak) in g.iter_mut().zip(&a) {
                *gk += r * ak;
            }
            for u in 0..p {
                let wu = w * a[u];
                let row = h.row_mut(u);
                for v in 0..=u {
                    row[v] += wu * a[v];
                }
            }
        }
        for k in 0..beta.len() {
            g[k + 1] += 2.0 * self.ridge * self.q[k % m] * beta[k];
            h.row_mut(k + 1)[k + 1] += 2.0 * self.ridge * self.q[k % m];
        }
        for u in 0..p {
            for v in 0..u {
                let x = h.row(u)[v];
                h.row_mut(v)[u] = x;
            }
        }
        (g, h)
    }
}

/// Solve `H d = g`, adding a growing multiple of the identity until the
/// factorisation succeeds.
fn newton_direction(h: &Matrix, g: &[f64]) -> Option<Vec<f64>> {
    let p = g.len();
    let scale = (0..p).map(|k| h.row(k)[k]).fold(0.0, f64::max).max(1e-300);
    let mut shift = 0.0;
    for _ in 0..40 {
        let mut hs = h.clone();
        for k in 0..p {
            hs.row_mut(k)[k] += shift;
        }
        if let Some(l) = cholesky(&hs) {
            let rhs = Matrix::from_vec(p, 1, g.to_vec()).ok()?;
            return Some(cholesky_solve(&l, &rhs).into_vec());
        }
        shift = if shift == 0.0 { 1e-12 * scale } else { shift * 10.0 };
    }
    None
}

impl FlmClassifier {
    /// Fit by damped Newton steps on the penalised negative log-likelihood
    /// with backtracking, so the objective never increases. Starts from
    /// zero, hence deterministic.
    pub fn fit(curves: &FunctionBatch, labels: &[bool], grid: &Grid, options: &FlmFitOptions) -> Result<Self> {
        if curves.points() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), actual: curves.points() });
        }
        if labels.len() != curves.n() {
            return Err(Error::LengthMismatch { expected: curves.n(), actual: labels.len() });
        }
        if !(options.ridge >= 0.0) || !options.ridge.is_finite() {
            return Err(Error::InvalidParameter("ridge must be nonnegative".into()));
        }
        if !(options.initial_step > 0.0) {
            return Err(Error::InvalidParameter("initial step must be positive".into()));
        }
        let positives = labels.iter().filter(|&&l| l).count();
        if positives == 0 || positives == labels.len() {
            return Err(Error::SingleClass);
        }
        let problem = Problem {
            x: curves,
            y: labels.iter().map(|&l| if l { 1.0 } else { 0.0 }).collect(),
            q: grid.weights(),
            ridge: options.ridge,
        };
        let mut alpha = 0.0;
        let mut beta = vec![0.0; curves.width()];
        let mut f = problem.objective(alpha, &beta);
        let mut trace = vec![f];
        for _ in 0..options.max_iter {
            let (g, h) = problem.derivatives(alpha, &beta);
            let Some(d) = newton_direction(&h, &g) else { break };
            let decrement: f64 = g.iter().zip(&d).map(|(a, b)| a * b).sum();
            if !(decrement > 2.0 * options.tolerance) {
                break;
            }
            let mut step = options.initial_step;
            let mut accepted = false;
            for _ in 0..60 {
                let a_new = alpha - step * d[0];
                let b_new: Vec<f64> = beta.iter().zip(&d[1..]).map(|(b, dk)| b - step * dk).collect();
                let f_new = problem.objective(a_new, &b_new);
                if f_new <= f - 0.25 * step * decrement {
                    alpha = a_new;
                    beta = b_new;
                    f = f_new;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
            trace.push(f);
        }
        if !alpha.is_finite() || beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::NonFinite("logistic coefficients".into()));
        }
        Ok(Self { grid: grid.clone(), beta, intercept: alpha, features: curves.features(), loss_trace: trace })
    }

    pub fn probabilities(&self, curves: &FunctionBatch) -> Result<Vec<f64>> {
        if curves.points() != self.grid.len() || curves.features() != self.features {
            return Err(shape_err("classifier input"));
        }
        let m = self.grid.len();
        let q = self.grid.weights();
        Ok((0..curves.n())
            .map(|i| {
                let z = self.intercept
                    + curves
                        .sample(i)
                        .iter()
                        .zip(&self.beta)
                        .enumerate()
                        .map(|(k, (x, b))| q[k % m] * x * b)
                        .sum::<f64>();
                math::sigmoid(z)
            })
            .collect())
    }

    /// Labels (`p ≥ 0.5`) and probabilities.
    pub fn predict(&self, curves: &FunctionBatch) -> Result<(Vec<bool>, Vec<f64>)> {
        let p = self.probabilities(curves)?;
        Ok((p.iter().map(|&p| p >= 0.5).collect(), p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::downstream::metrics::classification_error;
    use crate::rng;

    fn curves(n: usize, m: usize, seed: u64) -> (FunctionBatch, Grid) {
        let g = Grid::uniform(0.0, 1.0, m).unwrap();
        let mut s = rng::seeded(seed);
        let x = FunctionBatch::from_fn(n, 1, m, |_, _, _| rng::normal(&mut s));
        (x, g)
    }

    #[test]
    fn zero_model_gives_half() {
        let (x, g) = curves(4, 5, 1);
        let c = FlmClassifier { grid: g, beta: vec![0.0; 5], intercept: 0.0, features: 1, loss_trace: vec![] };
        assert!(c.probabilities(&x).unwrap().iter().all(|&p| p == 0.5));
    }

    #[test]
    fn separable_case_has_zero_training_error() {
        let (x, g) = curves(60, 11, 2);
        let labels: Vec<bool> = (0..60).map(|i| g.integrate(x.sample(i)).unwrap() > 0.0).collect();
        let c = FlmClassifier::fit(&x, &labels, &g, &FlmFitOptions { ridge: 1e-6, ..Default::default() }).unwrap();
        let (pred, _) = c.predict(&x).unwrap();
        assert_eq!(classification_error(&labels, &pred).unwrap(), 0.0);
    }

    #[test]
    fn shuffled_labels_are_near_chance() {
        let (x, g) = curves(400, 11, 3);
        let mut s = rng::seeded(9);
        let labels: Vec<bool> = (0..400).map(|_| rng::uniform(&mut s, 0.0, 1.0) < 0.5).collect();
        let fit = FlmClassifier::fit(&x.select(&(0..200).collect::<Vec<_>>()), &labels[..200], &g, &Default::default())
            .unwrap();
        let (pred, _) = fit.predict(&x.select(&(200..400).collect::<Vec<_>>())).unwrap();
        let err = classification_error(&labels[200..], &pred).unwrap();
        assert!((err - 0.5).abs() <= 0.1, "{err}");
    }

    #[test]
    fn single_class_is_rejected() {
        let (x, g) = curves(5, 4, 4);
        let r = FlmClassifier::fit(&x, &[true; 5], &g, &Default::default());
        assert!(matches!(r, Err(Error::SingleClass)));
    }

    #[test]
    fn loss_trace_is_nonincreasing() {
        let (x, g) = curves(50, 9, 5);
        let labels: Vec<bool> = (0..50).map(|i| x.get(i, 0, 2) + 0.3 * x.get(i, 0, 7) > 0.1).collect();
        let c = FlmClassifier::fit(&x, &labels, &g, &Default::default()).unwrap();
        assert!(c.loss_trace.windows(2).all(|w| w[1] <= w[0]));
        assert!(c.loss_trace.last().unwrap() < &c.loss_trace[0]);
    }

    #[test]
    fn probability_is_monotone_in_score() {
        let g = Grid::uniform(0.0, 1.0, 3).unwrap();
        let c = FlmClassifier { grid: g, beta: vec![1.0, 2.0, 1.0], intercept: -0.2, features: 1, loss_trace: vec![] };
        let x = FunctionBatch::from_fn(5, 1, 3, |i, _, _| i as f64 - 2.0);
        let p = c.probabilities(&x).unwrap();
        assert!(p.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn predict_reproduces_fit_time_error() {
        let (x, g) = curves(40, 7, 6);
        let labels: Vec<bool> = (0..40).map(|i| x.get(i, 0, 3) > 0.0).collect();
        let c = FlmClassifier::fit(&x, &labels, &g, &Default::default()).unwrap();
        let (a, _) = c.predict(&x).unwrap();
        let (b, _) = c.predict(&x).unwrap();
        assert_eq!(a, b);
    }
}
