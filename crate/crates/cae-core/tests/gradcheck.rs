//! Finite-difference verification of every backward pass.
//!
//! Analytic gradients must match central differences on seeded random
//! inputs: relative error below 1e-4 per layer and below 1e-3 for the
//! end-to-end model gradient at a reduced width.

use cae_core::check::{
    flatten, max_relative_error, numerical_gradient, numerical_model_gradients, DEFAULT_STEP,
};
use cae_core::tensor::{
    conv2d_backward, conv2d_forward, mse_loss, relu, relu_backward, sigmoid, sigmoid_backward,
    upsample_backward, upsample_nearest, ConvParams, Tensor,
};
use cae_core::train::batch_gradients;
use cae_core::{CaeConfig, CaeModel};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const LAYER_TOL: f64 = 1e-4;
const MODEL_TOL: f64 = 1e-3;
const REL_FLOOR: f64 = 1e-6;

fn random_tensor(rng: &mut ChaCha8Rng, shape: &[usize], lo: f64, hi: f64) -> Tensor {
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| rng.gen_range(lo..hi)).collect();
    Tensor::new(shape.to_vec(), data).unwrap()
}

/// Projects a tensor onto fixed pseudo-random coefficients so gradients of a
/// scalar can be checked without symmetric-cancellation blind spots.
fn project(t: &Tensor, coefs: &Tensor) -> f64 {
    t.data().iter().zip(coefs.data()).map(|(a, b)| a * b).sum()
}

fn check_conv_case(seed: u64, in_shape: [usize; 3], out_c: usize, k: usize, stride: usize, padding: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let input = random_tensor(&mut rng, &in_shape, -1.0, 1.0);
    let params = ConvParams::new(
        random_tensor(&mut rng, &[out_c, in_shape[0], k, k], -0.8, 0.8),
        random_tensor(&mut rng, &[out_c], -0.3, 0.3),
        stride,
        padding,
    )
    .unwrap();
    let out = conv2d_forward(&input, &params).unwrap();
    let coefs = random_tensor(&mut rng, out.shape(), -1.0, 1.0);

    let analytic = conv2d_backward(&input, &params, &coefs).unwrap();

    let n_input = numerical_gradient(
        &input,
        |x| project(&conv2d_forward(x, &params).unwrap(), &coefs),
        DEFAULT_STEP,
    );
    let n_weights = numerical_gradient(
        &params.weights,
        |w| {
            let p = ConvParams::new(w.clone(), params.bias.clone(), stride, padding).unwrap();
            project(&conv2d_forward(&input, &p).unwrap(), &coefs)
        },
        DEFAULT_STEP,
    );
    let n_bias = numerical_gradient(
        &params.bias,
        |b| {
            let p = ConvParams::new(params.weights.clone(), b.clone(), stride, padding).unwrap();
            project(&conv2d_forward(&input, &p).unwrap(), &coefs)
        },
        DEFAULT_STEP,
    );

    let gap_in = max_relative_error(analytic.input.data(), n_input.data(), REL_FLOOR);
    let gap_w = max_relative_error(analytic.weights.data(), n_weights.data(), REL_FLOOR);
    let gap_b = max_relative_error(analytic.bias.data(), n_bias.data(), REL_FLOOR);
    assert!(
        gap_in < LAYER_TOL && gap_w < LAYER_TOL && gap_b < LAYER_TOL,
        "conv seed {seed} {in_shape:?} k{k} s{stride} p{padding}: gaps {gap_in:.2e}/{gap_w:.2e}/{gap_b:.2e}"
    );
}

#[test]
fn conv2d_backward_matches_finite_differences() {
    // The documented reference case: 1x4x4 input, 2 output channels, 3x3.
    check_conv_case(101, [1, 4, 4], 2, 3, 1, 0);
    // Strided, padded, multi-channel cases up to 5 channels and 8x8.
    check_conv_case(102, [3, 8, 8], 4, 3, 2, 1);
    check_conv_case(103, [5, 8, 8], 2, 5, 1, 2);
    check_conv_case(104, [2, 7, 5], 3, 3, 2, 1);
    check_conv_case(105, [4, 6, 6], 1, 1, 1, 0);
}

#[test]
fn relu_backward_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut input = random_tensor(&mut rng, &[4, 8, 8], -1.0, 1.0);
    // Central differences straddle the kink at zero; keep probes away.
    for v in input.data_mut() {
        if v.abs() < 0.05 {
            *v += 0.1_f64.copysign(*v + 0.5);
        }
    }
    let coefs = random_tensor(&mut rng, &[4, 8, 8], -1.0, 1.0);
    let analytic = relu_backward(&input, &coefs).unwrap();
    let numeric = numerical_gradient(&input, |x| project(&relu(x), &coefs), DEFAULT_STEP);
    let gap = max_relative_error(analytic.data(), numeric.data(), REL_FLOOR);
    assert!(gap < LAYER_TOL, "relu gradient gap {gap:.2e}");
}

#[test]
fn sigmoid_backward_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let input = random_tensor(&mut rng, &[3, 6, 6], -4.0, 4.0);
    let coefs = random_tensor(&mut rng, &[3, 6, 6], -1.0, 1.0);
    let output = sigmoid(&input);
    let analytic = sigmoid_backward(&output, &coefs).unwrap();
    let numeric = numerical_gradient(&input, |x| project(&sigmoid(x), &coefs), DEFAULT_STEP);
    let gap = max_relative_error(analytic.data(), numeric.data(), REL_FLOOR);
    assert!(gap < LAYER_TOL, "sigmoid gradient gap {gap:.2e}");
}

#[test]
fn upsample_backward_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for factor in [1usize, 2, 3] {
        let input = random_tensor(&mut rng, &[2, 4, 4], -1.0, 1.0);
        let coefs = random_tensor(&mut rng, &[2, 4 * factor, 4 * factor], -1.0, 1.0);
        let analytic = upsample_backward(&coefs, factor).unwrap();
        let numeric = numerical_gradient(
            &input,
            |x| project(&upsample_nearest(x, factor).unwrap(), &coefs),
            DEFAULT_STEP,
        );
        let gap = max_relative_error(analytic.data(), numeric.data(), REL_FLOOR);
        assert!(gap < LAYER_TOL, "upsample factor {factor} gap {gap:.2e}");
    }
}

#[test]
fn upsample_adjoint_consistency() {
    // Backward of an all-ones upstream puts factor^2 into every input cell.
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for factor in [1usize, 2, 4] {
        let input = random_tensor(&mut rng, &[3, 5, 5], 0.0, 1.0);
        let up = upsample_nearest(&input, factor).unwrap();
        let ones = Tensor::filled(up.shape().to_vec(), 1.0);
        let back = upsample_backward(&ones, factor).unwrap();
        assert!(back
            .data()
            .iter()
            .all(|&v| v == (factor * factor) as f64));
    }
}

#[test]
fn mse_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let pred = random_tensor(&mut rng, &[3, 5, 5], 0.0, 1.0);
    let target = random_tensor(&mut rng, &[3, 5, 5], 0.0, 1.0);
    let (_, analytic) = mse_loss(&pred, &target).unwrap();
    let numeric = numerical_gradient(&pred, |p| mse_loss(p, &target).unwrap().0, DEFAULT_STEP);
    let gap = max_relative_error(analytic.data(), numeric.data(), REL_FLOOR);
    assert!(gap < 1e-6, "mse gradient gap {gap:.2e}");
}

#[test]
fn end_to_end_model_gradient_matches_finite_differences() {
    let config = CaeConfig {
        input_size: (3, 64, 64),
        encoder_channels: vec![2, 4, 8],
        kernel_size: 3,
    };
    let mut model = CaeModel::build(&config, 2024).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let image = random_tensor(&mut rng, &[3, 64, 64], 0.0, 1.0);

    let (_, analytic) = batch_gradients(&model, &[&image]).unwrap();
    let numeric = numerical_model_gradients(
        &mut model,
        |m| {
            let recon = m.reconstruct(&image).unwrap();
            mse_loss(&recon, &image).unwrap().0
        },
        DEFAULT_STEP,
    );
    let gap = max_relative_error(&flatten(&analytic), &flatten(&numeric), REL_FLOOR);
    assert!(gap < MODEL_TOL, "end-to-end gradient gap {gap:.2e}");
}
