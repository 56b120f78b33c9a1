use bfae_core::rng;
use bfae_core::{Activation, BfaeConfig, BfaeModel, ContinuousLayer, FunctionBatch, Grid, InitScheme};
use proptest::prelude::*;
use rand::Rng as _;

fn random_batch(n: usize, r: usize, m: usize, seed: u64) -> FunctionBatch {
    let mut s = rng::seeded(seed);
    FunctionBatch::from_fn(n, r, m, |_, _, _| rng::normal(&mut s))
}

fn random_layer(j_in: usize, j_out: usize, m_in: usize, m_out: usize, act: Activation, seed: u64) -> ContinuousLayer {
    let mut l = ContinuousLayer::init(
        Grid::uniform(0.0, 1.0, m_in).unwrap(),
        Grid::uniform(0.0, 1.0, m_out).unwrap(),
        j_in,
        j_out,
        act,
        InitScheme::Glorot,
        seed,
    )
    .unwrap();
    let mut s = rng::seeded(seed ^ 0xb1a5);
    l.biases.iter_mut().for_each(|b| *b = 0.3 * rng::normal(&mut s));
    l
}

fn activation() -> impl Strategy<Value = Activation> {
    prop_oneof![Just(Activation::Tanh), Just(Activation::Sigmoid), Just(Activation::Linear), Just(Activation::Relu)]
}

fn smooth_activation() -> impl Strategy<Value = Activation> {
    prop_oneof![Just(Activation::Tanh), Just(Activation::Sigmoid), Just(Activation::Linear)]
}

/// Scalar objective `Σ c·layer(x)` so every output entry contributes.
fn objective(layer: &ContinuousLayer, x: &FunctionBatch, c: &FunctionBatch) -> f64 {
    let y = layer.apply(x).unwrap();
    y.as_slice().iter().zip(c.as_slice()).map(|(a, b)| a * b).sum()
}

fn close(fd: f64, an: f64, tol: f64) -> bool {
    (fd - an).abs() <= tol * fd.abs().max(an.abs()) + 1e-9
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn layer_gradients_match_finite_differences(
        j_in in 1usize..=3, j_out in 1usize..=3, m_in in 2usize..=9, m_out in 2usize..=9,
        act in activation(), seed in any::<u64>(),
    ) {
        let layer = random_layer(j_in, j_out, m_in, m_out, act, seed);
        let x = random_batch(3, j_in, m_in, seed.wrapping_add(1));
        let c = random_batch(3, j_out, m_out, seed.wrapping_add(2));
        let (_, cache) = layer.forward(&x).unwrap();
        let (grads, grad_x) = layer.backward(&cache, &c).unwrap();
        let h = 1e-6;
        let tol = if act == Activation::Relu { 1e-4 } else { 1e-5 };
        // a relu pre-activation within h of zero makes the difference quotient meaningless
        let near_kink = |l: &ContinuousLayer, x: &FunctionBatch| {
            act == Activation::Relu && l.forward(x).unwrap().1.pre_activation.as_slice().iter().any(|p| p.abs() < 1e-4)
        };
        prop_assume!(!near_kink(&layer, &x));
        let flat: Vec<f64> = grads.weights.iter().chain(&grads.biases).copied().collect();
        for k in 0..layer.n_params() {
            let mut p = layer.clone();
            *p.param_mut(k) += h;
            let mut m = layer.clone();
            *m.param_mut(k) -= h;
            let fd = (objective(&p, &x, &c) - objective(&m, &x, &c)) / (2.0 * h);
            prop_assert!(close(fd, flat[k], tol), "param {}: fd {} analytic {}", k, fd, flat[k]);
        }
        for k in 0..x.as_slice().len() {
            let mut xp = x.clone();
            xp.as_mut_slice()[k] += h;
            let mut xm = x.clone();
            xm.as_mut_slice()[k] -= h;
            let fd = (objective(&layer, &xp, &c) - objective(&layer, &xm, &c)) / (2.0 * h);
            prop_assert!(close(fd, grad_x.as_slice()[k], tol), "input {}: fd {} analytic {}", k, fd, grad_x.as_slice()[k]);
        }
    }

    #[test]
    fn linear_layer_adjoint_consistency(
        j_in in 1usize..=3, j_out in 1usize..=3, m_in in 2usize..=12, m_out in 2usize..=12, seed in any::<u64>(),
    ) {
        let mut layer = random_layer(j_in, j_out, m_in, m_out, Activation::Linear, seed);
        layer.biases.iter_mut().for_each(|b| *b = 0.0);
        let x = random_batch(1, j_in, m_in, seed.wrapping_add(3));
        let y = random_batch(1, j_out, m_out, seed.wrapping_add(4));
        let (ax, cache) = layer.forward(&x).unwrap();
        // grad_input of Σ q_out·y·(Ax) is q_in ⊙ (A* y)
        let mut seed_up = y.clone();
        for r in 0..j_out {
            for (v, q) in seed_up.curve_mut(0, r).iter_mut().zip(layer.out_grid.weights()) {
                *v *= q;
            }
        }
        let (_, gx) = layer.backward(&cache, &seed_up).unwrap();
        let lhs: f64 = (0..j_out).map(|r| layer.out_grid.inner_product(ax.curve(0, r), y.curve(0, r)).unwrap()).sum();
        let rhs: f64 = (0..j_in)
            .map(|j| {
                let adj: Vec<f64> = gx.curve(0, j).iter().zip(layer.in_grid.weights()).map(|(g, q)| g / q).collect();
                layer.in_grid.inner_product(x.curve(0, j), &adj).unwrap()
            })
            .sum();
        prop_assert!((lhs - rhs).abs() < 1e-10 * (1.0 + lhs.abs()));
    }

    #[test]
    fn linear_layer_is_linear_in_input(seed in any::<u64>(), a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let mut layer = random_layer(2, 3, 7, 5, Activation::Linear, seed);
        layer.biases.iter_mut().for_each(|v| *v = 0.0);
        let x = random_batch(2, 2, 7, seed.wrapping_add(5));
        let y = random_batch(2, 2, 7, seed.wrapping_add(6));
        let mix = FunctionBatch::from_fn(2, 2, 7, |i, j, t| a * x.get(i, j, t) + b * y.get(i, j, t));
        let (fx, fy, fm) = (layer.apply(&x).unwrap(), layer.apply(&y).unwrap(), layer.apply(&mix).unwrap());
        for k in 0..fm.as_slice().len() {
            let e = a * fx.as_slice()[k] + b * fy.as_slice()[k];
            prop_assert!((fm.as_slice()[k] - e).abs() < 1e-12 * (1.0 + e.abs()));
        }
    }

    #[test]
    fn permuting_input_neurons_permutes_nothing_else(seed in any::<u64>(), act in smooth_activation()) {
        let layer = random_layer(3, 2, 6, 4, act, seed);
        let x = random_batch(2, 3, 6, seed.wrapping_add(7));
        let perm = [2usize, 0, 1];
        let mut pl = layer.clone();
        for r in 0..2 {
            for (new_j, &old_j) in perm.iter().enumerate() {
                let (src, dst) = (layer.surface_offset(r, old_j), layer.surface_offset(r, new_j));
                let len = 4 * 6;
                pl.weights[dst..dst + len].copy_from_slice(&layer.weights[src..src + len]);
            }
        }
        let px = FunctionBatch::from_fn(2, 3, 6, |i, j, t| x.get(i, perm[j], t));
        let (a, b) = (layer.apply(&x).unwrap(), pl.apply(&px).unwrap());
        for (u, v) in a.as_slice().iter().zip(b.as_slice()) {
            prop_assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn permuting_output_neurons_permutes_outputs(seed in any::<u64>(), act in smooth_activation()) {
        let layer = random_layer(2, 3, 5, 6, act, seed);
        let x = random_batch(2, 2, 5, seed.wrapping_add(8));
        let perm = [1usize, 2, 0];
        let mut pl = layer.clone();
        for (new_r, &old_r) in perm.iter().enumerate() {
            for j in 0..2 {
                let (src, dst) = (layer.surface_offset(old_r, j), layer.surface_offset(new_r, j));
                pl.weights[dst..dst + 30].copy_from_slice(&layer.weights[src..src + 30]);
            }
            pl.biases[new_r * 6..new_r * 6 + 6].copy_from_slice(&layer.biases[old_r * 6..old_r * 6 + 6]);
        }
        let y = layer.apply(&x).unwrap();
        let py = pl.apply(&x).unwrap();
        for i in 0..2 {
            for (new_r, &old_r) in perm.iter().enumerate() {
                prop_assert_eq!(py.curve(i, new_r), y.curve(i, old_r));
            }
        }
    }
}

fn random_config(rng: &mut bfae_core::rng::Rng) -> BfaeConfig {
    let acts = [Activation::Tanh, Activation::Sigmoid, Activation::Linear];
    let layers = rng.gen_range(2..=3);
    let r = rng.gen_range(1..=3);
    let m = rng.gen_range(2..=9);
    let mut feature_counts = vec![r];
    let mut grid_sizes = vec![m];
    for _ in 1..layers {
        feature_counts.push(rng.gen_range(1..=3));
        grid_sizes.push(rng.gen_range(1..=m));
    }
    feature_counts.push(r);
    grid_sizes.push(m);
    let mut c = BfaeConfig::autoencoder(r, m, 1, 1);
    c.feature_counts = feature_counts;
    c.grid_sizes = grid_sizes;
    c.latent_index = rng.gen_range(1..layers);
    c.activations = (0..layers).map(|_| acts[rng.gen_range(0..3)]).collect();
    c.init = InitScheme::Glorot;
    c.seed = rng.gen();
    c
}

#[test]
fn whole_network_gradients_on_random_architectures() {
    let mut pick = rng::seeded(2024);
    let h = 1e-6;
    let mut checked = 0;
    for trial in 0..40 {
        let c = random_config(&mut pick);
        let mut model = BfaeModel::build(&c).unwrap();
        // nonzero biases so the activations are exercised off-centre
        let n = model.n_params();
        for k in 0..n {
            let p = model.param_mut(k);
            if *p == 0.0 {
                *p = 0.2 * rng::normal(&mut pick);
            }
        }
        let x = random_batch(3, c.feature_counts[0], c.grid_sizes[0], trial);
        let (_, grads) = model.gradients(&x).unwrap();
        let flat: Vec<f64> = grads.iter().flat_map(|g| g.weights.iter().chain(&g.biases).copied()).collect();
        assert_eq!(flat.len(), n);
        for _ in 0..8 {
            let k = pick.gen_range(0..n);
            let mut p = model.clone();
            *p.param_mut(k) += h;
            let mut m = model.clone();
            *m.param_mut(k) -= h;
            let fd = (p.loss(&x).unwrap() - m.loss(&x).unwrap()) / (2.0 * h);
            assert!(close(fd, flat[k], 1e-4), "config {c:?} param {k}: fd {fd} analytic {}", flat[k]);
            checked += 1;
        }
    }
    assert!(checked >= 200);
}
