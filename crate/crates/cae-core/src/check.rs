//! Numerical gradient-checking helpers.
//!
//! These only ever evaluate caller-supplied closures, so they stay
//! independent of the analytic backward passes they verify.

use alloc::vec::Vec;

use crate::math;
use crate::model::CaeModel;
use crate::tensor::Tensor;

/// Step used for central differences.
pub const DEFAULT_STEP: f64 = 1e-5;

/// Central-difference gradient of `f` with respect to every element of `x`.
pub fn numerical_gradient<F>(x: &Tensor, mut f: F, step: f64) -> Tensor
where
    F: FnMut(&Tensor) -> f64,
{
    let mut probe = x.clone();
    let mut grad = Tensor::zeros(x.shape().to_vec());
    for i in 0..x.len() {
        let orig = probe.data()[i];
        probe.data_mut()[i] = orig + step;
        let hi = f(&probe);
        probe.data_mut()[i] = orig - step;
        let lo = f(&probe);
        probe.data_mut()[i] = orig;
        grad.data_mut()[i] = (hi - lo) / (2.0 * step);
    }
    grad
}

/// Largest relative error between paired gradient components.
///
/// Each pair is scored as `|a - n| / max(|a|, |n|, floor)`; the floor keeps
/// near-zero pairs from amplifying finite-difference noise.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64], floor: f64) -> f64 {
    assert_eq!(analytic.len(), numeric.len(), "gradient lengths differ");
    let mut worst = 0.0f64;
    for (&a, &n) in analytic.iter().zip(numeric) {
        let scale = math::abs(a).max(math::abs(n)).max(floor);
        worst = worst.max(math::abs(a - n) / scale);
    }
    worst
}

/// Convenience wrapper combining [`numerical_gradient`] and
/// [`max_relative_error`] over whole tensors.
pub fn gradient_gap<F>(x: &Tensor, analytic: &Tensor, f: F, step: f64) -> f64
where
    F: FnMut(&Tensor) -> f64,
{
    let numeric = numerical_gradient(x, f, step);
    max_relative_error(analytic.data(), numeric.data(), 1e-6)
}

/// Collects tensors' elements into one flat vector, preserving order.
pub fn flatten(tensors: &[Tensor]) -> Vec<f64> {
    tensors.iter().flat_map(|t| t.data().iter().copied()).collect()
}

/// Central-difference gradients of a scalar loss with respect to every model
/// parameter, in [`CaeModel::parameters`] order. Only runs forward passes.
pub fn numerical_model_gradients<F>(model: &mut CaeModel, mut loss: F, step: f64) -> Vec<Tensor>
where
    F: FnMut(&CaeModel) -> f64,
{
    let shapes: Vec<Vec<usize>> = model
        .parameters()
        .iter()
        .map(|p| p.shape().to_vec())
        .collect();
    let mut grads = Vec::with_capacity(shapes.len());
    for (pi, shape) in shapes.iter().enumerate() {
        let mut grad = Tensor::zeros(shape.clone());
        for i in 0..grad.len() {
            let orig = model.parameters()[pi].data()[i];
            model.parameters_mut()[pi].data_mut()[i] = orig + step;
            let hi = loss(model);
            model.parameters_mut()[pi].data_mut()[i] = orig - step;
            let lo = loss(model);
            model.parameters_mut()[pi].data_mut()[i] = orig;
            grad.data_mut()[i] = (hi - lo) / (2.0 * step);
        }
        grads.push(grad);
    }
    grads
}
