//! Matérn-5/2 Gaussian-process curves with additive white noise.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::dataset::FunctionalDataset;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linalg::{cholesky, Matrix};
use crate::math;
use crate::rng;
use crate::tensor::FunctionBatch;

/// Matérn covariance parameters. Smoothness is fixed at ν = 5/2.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MaternParams {
    pub sigma2: f64,
    pub rho: f64,
}

impl MaternParams {
    pub const NU: f64 = 2.5;

    pub fn new(sigma2: f64, rho: f64) -> Result<Self> {
        let p = Self { sigma2, rho };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(Error::InvalidParameter(format!("sigma2 must be > 0, got {}", self.sigma2)));
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::InvalidParameter(format!("rho must be > 0, got {}", self.rho)));
        }
        Ok(())
    }
}

impl Default for MaternParams {
    /// σ² = 1, ρ = 0.5.
    fn default() -> Self {
        Self { sigma2: 1.0, rho: 0.5 }
    }
}

/// `σ²(1 + √5·d/ρ + 5d²/(3ρ²))·exp(−√5·d/ρ)` with `d = |t − s|`.
pub fn matern52_cov(t: f64, s: f64, p: &MaternParams) -> f64 {
    let a = math::sqrt(5.0) * math::abs(t - s) / p.rho;
    p.sigma2 * (1.0 + a + a * a / 3.0) * math::exp(-a)
}

/// Gram matrix of the kernel over `points`.
pub fn cov_matrix(points: &[f64], p: &MaternParams) -> Matrix {
    let m = points.len();
    let mut k = Matrix::zeros(m, m);
    for i in 0..m {
        k[(i, i)] = p.sigma2;
        for j in 0..i {
            let v = matern52_cov(points[i], points[j], p);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// Cholesky factor of `k + jitter·I`, starting at `1e-10·σ²` and escalating
/// ×10 up to `1e-6·σ²`. Returns the factor and the jitter that worked.
pub fn jittered_cholesky(k: &Matrix, sigma2: f64) -> Result<(Matrix, f64)> {
    let mut jitter = 1e-10 * sigma2;
    let max = 1e-6 * sigma2 * (1.0 + 1e-9);
    loop {
        let mut kj = k.clone();
        for i in 0..kj.rows() {
            kj[(i, i)] += jitter;
        }
        if let Some(l) = cholesky(&kj) {
            return Ok((l, jitter));
        }
        if jitter * 10.0 > max {
            return Err(Error::CholeskyFailure { jitter });
        }
        jitter *= 10.0;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n_samples: usize,
    pub n_features: usize,
    pub grid: Grid,
    pub matern: MaternParams,
    pub noise_sd: f64,
    pub seed: u64,
}

impl SimConfig {
    /// Default noise standard deviation for ε(t).
    pub const DEFAULT_NOISE_SD: f64 = 0.1;

    pub fn new(n_samples: usize, n_features: usize, m: usize, seed: u64) -> Result<Self> {
        Ok(Self {
            n_samples,
            n_features,
            grid: Grid::uniform(0.0, 1.0, m)?,
            matern: MaternParams::default(),
            noise_sd: Self::DEFAULT_NOISE_SD,
            seed,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 || self.n_features == 0 {
            return Err(Error::InvalidParameter(String::from("n_samples and n_features must be >= 1")));
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(Error::InvalidParameter(format!("noise_sd must be >= 0, got {}", self.noise_sd)));
        }
        self.matern.validate()
    }
}

/// Draw `N` samples of `R` independent zero-mean GP curves plus iid
/// `N(0, noise_sd²)` noise.
///
/// Sample `i` uses ChaCha substream `i` of `cfg.seed`: first the `R·M`
/// standard normals for the curves (feature-major), then `R·M` noise draws.
pub fn sample_gp(cfg: &SimConfig) -> Result<FunctionalDataset> {
    cfg.validate()?;
    let m = cfg.grid.len();
    let k = cov_matrix(cfg.grid.points(), &cfg.matern);
    let (l, _) = jittered_cholesky(&k, cfg.matern.sigma2)?;
    let mut out = FunctionBatch::zeros(cfg.n_samples, cfg.n_features, m);
    let mut z = alloc::vec![0.0; m];
    for i in 0..cfg.n_samples {
        let mut stream = rng::substream(cfg.seed, i as u64);
        for r in 0..cfg.n_features {
            z.iter_mut().for_each(|v| *v = rng::normal(&mut stream));
            let curve = out.curve_mut(i, r);
            for (a, c) in curve.iter_mut().enumerate() {
                *c = l.row(a)[..=a].iter().zip(&z).map(|(x, y)| x * y).sum();
            }
        }
        if cfg.noise_sd > 0.0 {
            for v in out.sample_mut(i) {
                *v += cfg.noise_sd * rng::normal(&mut stream);
            }
        }
    }
    FunctionalDataset::unlabeled(out, cfg.grid.clone())
}

/// Pointwise sample covariance between columns `a` and `b` of flattened
/// samples; helper for simulator diagnostics.
pub fn empirical_cov(data: &FunctionBatch, a: usize, b: usize) -> f64 {
    let n = data.n() as f64;
    let col = |c: usize| -> Vec<f64> { (0..data.n()).map(|i| data.sample(i)[c]).collect() };
    let (xa, xb) = (col(a), col(b));
    let ma = xa.iter().sum::<f64>() / n;
    let mb = xb.iter().sum::<f64>() / n;
    xa.iter().zip(&xb).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (n - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn covariance_closed_form() {
        let p = MaternParams::default();
        assert_eq!(matern52_cov(0.3, 0.3, &p), 1.0);
        assert_eq!(matern52_cov(0.2, 0.7, &p), matern52_cov(0.7, 0.2, &p));
        // (1 + √5 + 5/3)·e^{−√5} = 0.5239941088318203 (mpmath, 30 digits)
        assert!((matern52_cov(0.0, 0.5, &p) - 0.523_994_108_831_820_3).abs() < 1e-15);
        let p2 = MaternParams::new(2.5, 0.5).unwrap();
        assert!((matern52_cov(0.0, 0.5, &p2) - 2.5 * 0.523_994_108_831_820_3).abs() < 1e-14);
    }

    #[test]
    fn params_validated() {
        assert!(MaternParams::new(0.0, 1.0).is_err());
        assert!(MaternParams::new(1.0, -1.0).is_err());
    }

    #[test]
    fn gram_matrix_shape_and_symmetry() {
        let p = MaternParams { sigma2: 3.0, rho: 0.5 };
        let k = cov_matrix(&[0.4], &p);
        assert_eq!(k.as_slice(), &[3.0]);
        let g = Grid::uniform(0.0, 1.0, 20).unwrap();
        let k = cov_matrix(g.points(), &p);
        for i in 0..20 {
            assert_eq!(k[(i, i)], 3.0);
            for j in 0..20 {
                assert_eq!(k[(i, j)].to_bits(), k[(j, i)].to_bits());
            }
        }
    }

    #[test]
    fn degenerate_gp_is_zero() {
        let mut cfg = SimConfig::new(5, 2, 30, 1).unwrap();
        cfg.matern.sigma2 = 1e-12;
        cfg.noise_sd = 0.0;
        let d = sample_gp(&cfg).unwrap();
        assert!(d.values.as_slice().iter().all(|v| v.abs() < 1e-5));
    }

    #[test]
    fn sampling_is_deterministic() {
        let cfg = SimConfig::new(7, 3, 25, 99).unwrap();
        let a = sample_gp(&cfg).unwrap();
        let b = sample_gp(&cfg).unwrap();
        let bits = |d: &FunctionalDataset| d.values.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        let c = sample_gp(&SimConfig { seed: 100, ..cfg }).unwrap();
        assert_ne!(bits(&a), bits(&c));
    }

    #[test]
    fn invalid_config_rejected() {
        let mut cfg = SimConfig::new(5, 1, 10, 0).unwrap();
        cfg.noise_sd = -1.0;
        assert!(sample_gp(&cfg).is_err());
        cfg.noise_sd = 0.1;
        cfg.n_features = 0;
        assert!(sample_gp(&cfg).is_err());
    }
}
