use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::math;
use crate::tensor::FunctionBatch;

/// Functional RMSE: `sqrt((1/N)·Σ_i Σ_r ∫ (X − X̂)² dt)`.
pub fn functional_rmse(truth: &FunctionBatch, estimate: &FunctionBatch, grid: &Grid) -> Result<f64> {
    Ok(math::sqrt(crate::model::loss(truth, estimate, grid)?))
}

/// Plain root-mean-square error over paired scalars.
pub fn rmse(truth: &[f64], estimate: &[f64]) -> Result<f64> {
    if truth.len() != estimate.len() {
        return Err(Error::LengthMismatch { expected: truth.len(), actual: estimate.len() });
    }
    if truth.is_empty() {
        return Ok(0.0);
    }
    let s: f64 = truth.iter().zip(estimate).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(math::sqrt(s / truth.len() as f64))
}

/// Fraction of mismatched labels.
pub fn classification_error(truth: &[bool], predicted: &[bool]) -> Result<f64> {
    if truth.len() != predicted.len() {
        return Err(Error::LengthMismatch { expected: truth.len(), actual: predicted.len() });
    }
    if truth.is_empty() {
        return Ok(0.0);
    }
    let wrong = truth.iter().zip(predicted).filter(|(a, b)| a != b).count();
    Ok(wrong as f64 / truth.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn random(n: usize, r: usize, m: usize, seed: u64) -> FunctionBatch {
        let mut s = rng::seeded(seed);
        FunctionBatch::from_fn(n, r, m, |_, _, _| rng::normal(&mut s))
    }

    #[test]
    fn rmse_examples() {
        let g = Grid::uniform(0.0, 1.0, 21).unwrap();
        let x = random(5, 3, 21, 1);
        assert_eq!(functional_rmse(&x, &x, &g).unwrap(), 0.0);
        let mut y = x.clone();
        y.as_mut_slice().iter_mut().for_each(|v| *v -= 0.4);
        assert!((functional_rmse(&x, &y, &g).unwrap() - 0.4 * 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn rmse_matches_direct_recomputation() {
        let g = Grid::uniform(0.0, 2.0, 13).unwrap();
        let (x, y) = (random(4, 2, 13, 2), random(4, 2, 13, 3));
        let mut total = 0.0;
        for i in 0..4 {
            for r in 0..2 {
                let sq: std::vec::Vec<f64> =
                    (0..13).map(|t| (x.get(i, r, t) - y.get(i, r, t)).powi(2)).collect();
                total += g.integrate(&sq).unwrap();
            }
        }
        let want = (total / 4.0).sqrt();
        assert!((functional_rmse(&x, &y, &g).unwrap() - want).abs() < 1e-12);
        assert_eq!(functional_rmse(&x, &y, &g).unwrap(), functional_rmse(&y, &x, &g).unwrap());
    }

    #[test]
    fn scalar_metrics() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 4.0]).unwrap(), 2f64.sqrt());
        assert!(rmse(&[1.0], &[]).is_err());
        assert_eq!(classification_error(&[true, false, true, true], &[true, true, true, false]).unwrap(), 0.5);
    }
}
