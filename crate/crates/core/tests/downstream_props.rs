use bfae_core::downstream::{FlmClassifier, FlmFitOptions, FoFRegression};
use bfae_core::downstream::pipeline::response_rmse;
use bfae_core::{rng, FunctionBatch, Grid};
use proptest::prelude::*;

fn random(n: usize, r: usize, m: usize, seed: u64) -> FunctionBatch {
    let mut s = rng::seeded(seed);
    FunctionBatch::from_fn(n, r, m, |_, _, _| rng::normal(&mut s))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fof_training_residual_shrinks_with_ridge(seed in any::<u64>(), n in 8usize..30, m in 3usize..8) {
        let g = Grid::uniform(0.0, 1.0, m).unwrap();
        let x = random(n, 2, m, seed);
        let y = random(n, 1, m, seed.wrapping_add(1));
        let mut last = f64::INFINITY;
        for ridge in [10.0, 1.0, 1e-1, 1e-2, 1e-3, 1e-4, 1e-6] {
            let f = FoFRegression::fit(&x, &y, &g, &g, ridge).unwrap();
            let e = response_rmse(&y, &f.predict(&x).unwrap(), &g).unwrap();
            prop_assert!(e <= last + 1e-10, "ridge {}: {} > {}", ridge, e, last);
            last = e;
        }
    }

    #[test]
    fn flm_objective_decreases_under_small_steps(seed in any::<u64>(), n in 10usize..40, m in 3usize..10) {
        let g = Grid::uniform(0.0, 1.0, m).unwrap();
        let x = random(n, 1, m, seed);
        let labels: Vec<bool> = (0..n).map(|i| x.get(i, 0, 0) - x.get(i, 0, m - 1) > 0.0 || i % 7 == 0).collect();
        prop_assume!(labels.iter().any(|&l| l) && labels.iter().any(|&l| !l));
        let mut step = 1.0;
        for _ in 0..4 {
            let c = FlmClassifier::fit(&x, &labels, &g, &FlmFitOptions { initial_step: step, max_iter: 200, ..Default::default() })
                .unwrap();
            prop_assert!(c.loss_trace.windows(2).all(|w| w[1] <= w[0]));
            step *= 0.5;
        }
    }
}
