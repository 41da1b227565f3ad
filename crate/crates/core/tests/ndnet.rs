mod common;

use common::{fd_input_grad, fd_param_grad, max_rel_err, naive_forward};
use proptest::prelude::*;
use rand::Rng as _;
use sdgc_core::ndnet::{Activation, Gradients, MlpModel, Momentum, NdArray, SgdConfig};
use sdgc_core::rng::{normal_vec, rng_from_seed};
use sdgc_core::Error;

const ACTIVATIONS: [Activation; 4] = [
    Activation::Relu,
    Activation::Tanh,
    Activation::Identity,
    Activation::Sigmoid,
];

#[test]
fn forward_matches_naive_loop() {
    let mut rng = rng_from_seed(11);
    for act in ACTIVATIONS {
        let model = MlpModel::new(&[5, 7, 3, 2], act, 3)
            .unwrap()
            .with_output_activation(Activation::Identity);
        let x = normal_vec(&mut rng, 4 * 5);
        let out = model.forward_rows(&x, 4).unwrap();
        for r in 0..4 {
            let expect = naive_forward(&model, &x[r * 5..(r + 1) * 5]);
            assert!(max_rel_err(&out[r * 2..(r + 1) * 2], &expect, 1e-12) < 1e-12);
        }
    }
}

#[test]
fn parameter_gradients_match_finite_differences() {
    let mut rng = rng_from_seed(5);
    for act in ACTIVATIONS {
        for trial in 0..5 {
            let mut model = MlpModel::new(&[3, 6, 4], act, trial).unwrap();
            // Nonzero biases keep relu pre-activations off the kink at zero.
            model
                .set_parameters(&normal_vec(&mut rng, model.param_count()))
                .unwrap();
            let x: Vec<f64> = normal_vec(&mut rng, 2 * 3);
            let up = normal_vec(&mut rng, 2 * 4);
            let (g, _) = model.backward_rows(&x, &up, 2).unwrap();
            let fd = fd_param_grad(&model, &x, 2, &up, 1e-6);
            let err = max_rel_err(&g.flat(), &fd, 1e-6);
            assert!(err < 1e-5, "{act}: relative error {err}");
        }
    }
}

#[test]
fn input_gradients_match_finite_differences() {
    let mut rng = rng_from_seed(6);
    for act in [Activation::Tanh, Activation::Sigmoid, Activation::Identity] {
        let model = MlpModel::new(&[4, 5, 3], act, 9).unwrap();
        let x = normal_vec(&mut rng, 3 * 4);
        let up = normal_vec(&mut rng, 3 * 3);
        let (_, dx) = model.backward_rows(&x, &up, 3).unwrap();
        let fd = fd_input_grad(&model, &x, 3, &up, 1e-6);
        assert!(max_rel_err(&dx, &fd, 1e-6) < 1e-6, "{act}");
    }
}

#[test]
fn sgd_step_is_plain_descent() {
    let model = MlpModel::new(&[2, 3, 1], Activation::Tanh, 1).unwrap();
    let x = NdArray::matrix(1, 2, vec![0.3, -0.4]).unwrap();
    let up = NdArray::matrix(1, 1, vec![1.0]).unwrap();
    let g = model.grad(&x, &up).unwrap();
    let cfg = SgdConfig::new(0.1, 1, 1).unwrap();
    let next = model.sgd_step(&g, &cfg).unwrap();
    for ((p, q), gv) in model
        .parameters()
        .iter()
        .zip(next.parameters())
        .zip(g.flat())
    {
        assert_eq!(q, p - 0.1 * gv);
    }
}

#[test]
fn zero_learning_rate_keeps_parameters() {
    let model = MlpModel::new(&[2, 2], Activation::Relu, 4).unwrap();
    let mut g = Gradients::zeros_like(&model);
    g.weights[0][1] = 3.0;
    let cfg = SgdConfig::new(0.0, 1, 1).unwrap();
    assert_eq!(model.sgd_step(&g, &cfg).unwrap(), model);
}

#[test]
fn non_finite_gradient_reports_flat_index() {
    let model = MlpModel::new(&[2, 3, 1], Activation::Relu, 4).unwrap();
    let mut g = Gradients::zeros_like(&model);
    // Layer 0 holds 6 weights and 3 biases, so layer 1's second weight is
    // flat index 10.
    g.weights[1][1] = f64::NAN;
    let cfg = SgdConfig::new(0.1, 1, 1).unwrap();
    match model.sgd_step(&g, &cfg) {
        Err(Error::NonFinite { index, .. }) => assert_eq!(index, 10),
        other => panic!("expected NonFinite, got {other:?}"),
    }
}

#[test]
fn shape_mismatch_is_reported() {
    let model = MlpModel::new(&[3, 2], Activation::Relu, 0).unwrap();
    let x = NdArray::matrix(2, 4, vec![0.0; 8]).unwrap();
    assert!(matches!(
        model.forward(&x),
        Err(Error::ShapeMismatch { .. })
    ));
}

#[test]
fn momentum_zero_equals_sgd() {
    let mut a = MlpModel::new(&[2, 3, 1], Activation::Tanh, 8).unwrap();
    let mut b = a.clone();
    let mut opt = Momentum::new(0.0).unwrap();
    let mut rng = rng_from_seed(2);
    for _ in 0..3 {
        let x = normal_vec(&mut rng, 2);
        let (g, _) = a.backward_rows(&x, &[1.0], 1).unwrap();
        opt.step(&mut a, &g, 0.05).unwrap();
        b.apply_sgd(&g, 0.05).unwrap();
    }
    assert_eq!(a, b);
}

#[test]
fn regression_fit_reduces_loss() {
    // y = sin(x) on [-2, 2].
    let mut model = MlpModel::new(&[1, 16, 1], Activation::Tanh, 3)
        .unwrap()
        .with_output_activation(Activation::Identity);
    let mut rng = rng_from_seed(1);
    let xs: Vec<f64> = (0..64).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let ys: Vec<f64> = xs.iter().map(|x: &f64| x.sin()).collect();
    let loss = |m: &MlpModel| {
        let p = m.forward_rows(&xs, 64).unwrap();
        p.iter()
            .zip(&ys)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / 64.0
    };
    let before = loss(&model);
    let mut opt = Momentum::new(0.9).unwrap();
    for _ in 0..500 {
        let p = model.forward_rows(&xs, 64).unwrap();
        let up: Vec<f64> = p
            .iter()
            .zip(&ys)
            .map(|(a, b)| 2.0 * (a - b) / 64.0)
            .collect();
        let (g, _) = model.backward_rows(&xs, &up, 64).unwrap();
        opt.step(&mut model, &g, 0.05).unwrap();
    }
    assert!(loss(&model) < 0.1 * before);
}

proptest! {
    #[test]
    fn batched_forward_equals_row_by_row(seed in 0u64..1000, rows in 1usize..6) {
        let model = MlpModel::new(&[3, 4, 2], Activation::Tanh, seed).unwrap();
        let x = normal_vec(&mut rng_from_seed(seed), rows * 3);
        let batched = model.forward_rows(&x, rows).unwrap();
        for r in 0..rows {
            let single = model.forward_rows(&x[r * 3..(r + 1) * 3], 1).unwrap();
            prop_assert!(max_rel_err(&batched[r * 2..(r + 1) * 2], &single, 1e-12) < 1e-12);
        }
    }

    #[test]
    fn parameter_round_trip(seed in 0u64..1000) {
        let model = MlpModel::new(&[2, 5, 3], Activation::Relu, seed).unwrap();
        let mut other = MlpModel::zeros(&[2, 5, 3], Activation::Relu).unwrap();
        other.set_parameters(&model.parameters()).unwrap();
        prop_assert_eq!(other.parameters(), model.parameters());
    }
}
