use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

fn layer(i: usize, o: usize, w: &[f64], b: &[f64], act: Activation) -> DenseLayer {
    DenseLayer::new(i, o, w.to_vec(), b.to_vec(), act).unwrap()
}

#[test]
fn identity_layer_passes_input_through() {
    let net = DenseNet::new(vec![layer(
        2,
        2,
        &[1.0, 0.0, 0.0, 1.0],
        &[0.0, 0.0],
        Activation::Identity,
    )])
    .unwrap();
    let out = net
        .forward(&Tensor::vector(vec![1.0, 2.0]).unwrap())
        .unwrap();
    assert_eq!(out.data(), &[1.0, 2.0]);
}

#[test]
fn zero_sigmoid_layer_outputs_half() {
    let net = DenseNet::new(vec![layer(
        3,
        4,
        &[0.0; 12],
        &[0.0; 4],
        Activation::Sigmoid,
    )])
    .unwrap();
    let out = net
        .forward(&Tensor::vector(vec![5.0, -100.0, 3.0]).unwrap())
        .unwrap();
    assert_eq!(out.data(), &[0.5; 4]);
}

#[test]
fn two_layer_relu_by_hand() {
    // x·W1 + b1 = [1+1, 2-1] + [0.5, -4] = [2.5, -3] → relu [2.5, 0]
    // [2.5, 0]·W2 + b2 = 5 + 0 - 1 = 4
    let net = DenseNet::new(vec![
        layer(2, 2, &[1.0, 2.0, -1.0, 1.0], &[0.5, -4.0], Activation::Relu),
        layer(2, 1, &[2.0, 3.0], &[-1.0], Activation::Identity),
    ])
    .unwrap();
    let out = net
        .forward(&Tensor::vector(vec![1.0, -1.0]).unwrap())
        .unwrap();
    assert_eq!(out.data(), &[4.0]);
}

#[test]
fn dimension_mismatch_is_rejected() {
    let net = DenseNet::new(vec![layer(2, 1, &[1.0, 1.0], &[0.0], Activation::Identity)]).unwrap();
    assert!(matches!(
        net.forward(&Tensor::vector(vec![1.0, 2.0, 3.0]).unwrap()),
        Err(NumericsError::ShapeMismatch { .. })
    ));
    let x = Tensor::vector(vec![1.0, 2.0]).unwrap();
    let bad_grad = Tensor::vector(vec![1.0, 1.0]).unwrap();
    assert!(net.backward(&x, &bad_grad).is_err());
}

#[test]
fn unchained_layers_are_rejected() {
    let err = DenseNet::new(vec![
        layer(2, 3, &[0.0; 6], &[0.0; 3], Activation::Relu),
        layer(2, 1, &[0.0; 2], &[0.0], Activation::Relu),
    ]);
    assert!(err.is_err());
}

#[test]
fn linear_weight_gradient_is_outer_product() {
    let net = DenseNet::new(vec![layer(
        3,
        2,
        &[0.3, -1.0, 2.0, 0.5, 0.0, 1.0],
        &[0.1, 0.2],
        Activation::Identity,
    )])
    .unwrap();
    let x = Tensor::vector(vec![1.5, -2.0, 4.0]).unwrap();
    let ones = Tensor::vector(vec![1.0, 1.0]).unwrap();
    let (grads, input_grad) = net.backward(&x, &ones).unwrap();
    assert_eq!(
        grads.layers[0].weights,
        vec![1.5, 1.5, -2.0, -2.0, 4.0, 4.0]
    );
    assert_eq!(grads.layers[0].bias, vec![1.0, 1.0]);
    // W·1 per input row
    let expect = [0.3 - 1.0, 2.0 + 0.5, 0.0 + 1.0];
    for (a, b) in input_grad.data().iter().zip(expect) {
        assert!((a - b).abs() < 1e-15);
    }
}

#[test]
fn frozen_net_rejects_updates() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut net = DenseNet::init(&[4, 3], &[Activation::Tanh], &mut rng)
        .unwrap()
        .frozen();
    let before = net.fingerprint();
    let x = Tensor::vector(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
    let (grads, _) = net
        .backward(&x, &Tensor::vector(vec![1.0; 3]).unwrap())
        .unwrap();
    assert!(grads.to_flat().iter().any(|&g| g != 0.0));
    let mut opt = OptimizerState::adam(0.1).unwrap();
    assert!(matches!(
        net.apply_gradients(&mut opt, &grads),
        Err(NumericsError::Frozen)
    ));
    assert!(net.set_params_flat(&vec![0.0; net.num_params()]).is_err());
    assert_eq!(net.fingerprint(), before);
}

#[test]
fn forward_is_pure_and_bitwise_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let net = DenseNet::init(
        &[16, 32, 8],
        &[Activation::Relu, Activation::Sigmoid],
        &mut rng,
    )
    .unwrap();
    let before = net.fingerprint();
    let x = Tensor::vector((0..16).map(|i| (i as f64).sin()).collect()).unwrap();
    let a = net.forward(&x).unwrap();
    let b = net.forward(&x).unwrap();
    assert!(a
        .data()
        .iter()
        .zip(b.data())
        .all(|(p, q)| p.to_bits() == q.to_bits()));
    assert_eq!(net.fingerprint(), before);
}

#[test]
fn batched_rows_match_single_rows_bitwise() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let net = DenseNet::init(
        &[40, 64, 96, 9],
        &[Activation::Relu, Activation::Relu, Activation::Sigmoid],
        &mut rng,
    )
    .unwrap();
    let rows = 37;
    let input: Vec<f64> = (0..rows * 40)
        .map(|_| rng.random_range(-2.0..2.0))
        .collect();
    let batched = net.forward_rows(&input, rows).unwrap();
    for r in 0..rows {
        let single = net.forward_rows(&input[r * 40..(r + 1) * 40], 1).unwrap();
        for (a, b) in single.iter().zip(&batched[r * 9..(r + 1) * 9]) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}

#[test]
fn training_step_changes_unfrozen_params() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut net = DenseNet::init(&[3, 2], &[Activation::Sigmoid], &mut rng).unwrap();
    let before = net.params_flat();
    let x = Tensor::vector(vec![1.0, 0.5, -1.0]).unwrap();
    let (grads, _) = net
        .backward(&x, &Tensor::vector(vec![1.0, -1.0]).unwrap())
        .unwrap();
    let mut opt = OptimizerState::adam(0.01).unwrap();
    net.apply_gradients(&mut opt, &grads).unwrap();
    assert_ne!(net.params_flat(), before);
    assert_eq!(opt.step_count(), 1);
}

/// Scalar objective `Σ c ⊙ net(x)` for a fixed random projection `c`; its
/// output gradient is `c`.
fn projected_output(net: &DenseNet, x: &[f64], rows: usize, c: &[f64]) -> f64 {
    net.forward_rows(x, rows)
        .unwrap()
        .iter()
        .zip(c)
        .map(|(a, b)| a * b)
        .sum()
}

fn gradient_check(dims: &[usize], acts: &[Activation], draws: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..draws {
        let mut net = DenseNet::init(dims, acts, &mut rng).unwrap();
        // nonzero biases so every code path is exercised
        let mut params = net.params_flat();
        for p in params.iter_mut() {
            *p += rng.random_range(-0.05..0.05);
        }
        net.set_params_flat(&params).unwrap();

        let rows = rng.random_range(1..4);
        let x: Vec<f64> = (0..rows * dims[0])
            .map(|_| rng.random_range(-1.5..1.5))
            .collect();
        let c: Vec<f64> = (0..rows * net.output_dim())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let input = Tensor::matrix(rows, dims[0], x.clone()).unwrap();
        let (grads, input_grad) = net
            .backward(
                &input,
                &Tensor::matrix(rows, net.output_dim(), c.clone()).unwrap(),
            )
            .unwrap();

        let fd_input =
            finite_difference_grad(|t| projected_output(&net, t.data(), rows, &c), &input, 1e-6)
                .unwrap();
        worst = worst.max(relative_error(input_grad.data(), fd_input.data()));

        let flat = Tensor::vector(params.clone()).unwrap();
        let mut probe = net.clone();
        let fd_params = finite_difference_grad(
            |t| {
                probe.set_params_flat(t.data()).unwrap();
                projected_output(&probe, &x, rows, &c)
            },
            &flat,
            1e-6,
        )
        .unwrap();
        worst = worst.max(relative_error(&grads.to_flat(), fd_params.data()));
    }
    assert!(
        worst < 1e-5,
        "{dims:?} {acts:?}: worst relative error {worst:e}"
    );
}

// The layer patterns used across the crate (generator, predictor,
// discriminator, genre classifier), at reduced widths so full parameter
// finite differences stay cheap.
#[test]
fn backward_matches_finite_differences_generator_pattern() {
    use Activation::*;
    gradient_check(&[6, 12, 16, 24], &[Relu, Relu, Sigmoid], 100, 1);
}

#[test]
fn backward_matches_finite_differences_predictor_pattern() {
    use Activation::*;
    gradient_check(&[24, 16, 8, 9], &[Relu, Relu, Sigmoid], 100, 2);
}

#[test]
fn backward_matches_finite_differences_discriminator_pattern() {
    gradient_check(&[9, 1], &[Activation::Sigmoid], 100, 3);
}

#[test]
fn backward_matches_finite_differences_classifier_pattern() {
    use Activation::*;
    gradient_check(&[24, 16, 5], &[Relu, Identity], 100, 4);
}

#[test]
fn backward_matches_finite_differences_tanh() {
    use Activation::*;
    gradient_check(&[5, 7, 3], &[Tanh, Tanh], 100, 5);
}
