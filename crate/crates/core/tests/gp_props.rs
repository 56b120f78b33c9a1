use bfae_core::gp::{cov_matrix, empirical_cov, matern52_cov, sample_gp, MaternParams, SimConfig};
use bfae_core::Grid;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn min_eigenvalue(k: &bfae_core::linalg::Matrix) -> f64 {
    let n = k.rows();
    let m = DMatrix::from_row_slice(n, n, k.as_slice());
    m.symmetric_eigenvalues().min()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn covariance_is_symmetric_psd(m in 2usize..120, sigma2 in 0.1f64..4.0, rho in 0.05f64..2.0) {
        let g = Grid::uniform(0.0, 1.0, m).unwrap();
        let p = MaternParams::new(sigma2, rho).unwrap();
        let k = cov_matrix(g.points(), &p);
        for a in 0..m {
            for b in 0..m {
                prop_assert_eq!(k[(a, b)], k[(b, a)]);
            }
            prop_assert_eq!(k[(a, a)], sigma2);
        }
        prop_assert!(min_eigenvalue(&k) >= -1e-8 * sigma2);
    }

    #[test]
    fn kernel_decreases_with_distance(d1 in 0.0f64..3.0, d2 in 0.0f64..3.0, rho in 0.05f64..2.0) {
        let p = MaternParams::new(1.0, rho).unwrap();
        let (near, far) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        prop_assert!(matern52_cov(0.0, near, &p) >= matern52_cov(0.0, far, &p));
        prop_assert!(matern52_cov(0.0, far, &p) > 0.0);
    }
}

#[test]
fn empirical_covariance_matches_kernel() {
    let mut cfg = SimConfig::new(2000, 1, 20, 11).unwrap();
    cfg.noise_sd = 0.0;
    let d = sample_gp(&cfg).unwrap();
    let k = cov_matrix(cfg.grid.points(), &cfg.matern);
    let mut worst: f64 = 0.0;
    for a in 0..20 {
        for b in 0..20 {
            worst = worst.max((empirical_cov(&d.values, a, b) - k[(a, b)]).abs());
        }
    }
    assert!(worst < 0.1, "max entrywise deviation {worst}");
}

#[test]
fn noise_adds_its_variance() {
    let s = 0.5;
    let mut clean = SimConfig::new(4000, 1, 10, 12).unwrap();
    clean.noise_sd = 0.0;
    let noisy = SimConfig { noise_sd: s, ..clean.clone() };
    let (a, b) = (sample_gp(&clean).unwrap(), sample_gp(&noisy).unwrap());
    for t in 0..10 {
        let gap = empirical_cov(&b.values, t, t) - empirical_cov(&a.values, t, t);
        assert!((gap - s * s).abs() < 0.06, "t={t}: variance gap {gap}");
    }
}

#[test]
fn features_are_independent() {
    let mut cfg = SimConfig::new(3000, 2, 8, 13).unwrap();
    cfg.noise_sd = 0.0;
    let d = sample_gp(&cfg).unwrap();
    // flattened columns: feature 0 at 0..8, feature 1 at 8..16
    for t in 0..8 {
        let c = empirical_cov(&d.values, t, 8 + t);
        assert!(c.abs() < 0.1, "cross-feature covariance {c} at t={t}");
    }
}
