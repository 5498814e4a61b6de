//! RMSprop optimization loop and its state.
//!
//! One optimizer step per batch, gradients averaged over the batch, batches
//! drawn from a seeded per-epoch shuffle. Everything reduces in a fixed
//! order, so a `(data, config)` pair fully determines the trained model.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;
use crate::model::CaeModel;
use crate::tensor::{mse_loss, Tensor};

/// Training protocol knobs. The defaults are the reference protocol:
/// 50 epochs, learning rate 0.001, batches of 32.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// RMSprop accumulator decay (rho).
    pub rmsprop_decay: f64,
    pub rmsprop_epsilon: f64,
    /// Seed for the per-epoch shuffle.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            learning_rate: 1e-3,
            batch_size: 32,
            rmsprop_decay: 0.9,
            rmsprop_epsilon: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if !self.learning_rate.is_finite() || self.learning_rate < 0.0 {
            return Err(Error::Config("learning rate must be finite and >= 0".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if !(0.0 < self.rmsprop_decay && self.rmsprop_decay < 1.0) {
            return Err(Error::Config("rmsprop decay must lie in (0, 1)".into()));
        }
        if !(self.rmsprop_epsilon > 0.0) {
            return Err(Error::Config("rmsprop epsilon must be positive".into()));
        }
        Ok(())
    }
}

/// Per-parameter squared-gradient accumulators, aligned with
/// [`CaeModel::parameters`].
#[derive(Debug, Clone, PartialEq)]
pub struct RmspropState {
    accumulators: Vec<Tensor>,
}

impl RmspropState {
    pub fn for_model(model: &CaeModel) -> Self {
        Self {
            accumulators: model
                .parameters()
                .iter()
                .map(|p| Tensor::zeros(p.shape().to_vec()))
                .collect(),
        }
    }

    pub(crate) fn from_tensors(accumulators: Vec<Tensor>) -> Self {
        Self { accumulators }
    }

    pub fn accumulators(&self) -> &[Tensor] {
        &self.accumulators
    }
}

/// One RMSprop update, in place:
/// `v' = rho*v + (1-rho)*g^2; param' = param - lr*g/(sqrt(v') + eps)`.
pub fn rmsprop_step(
    param: &mut Tensor,
    grad: &Tensor,
    accumulator: &mut Tensor,
    learning_rate: f64,
    decay: f64,
    epsilon: f64,
) -> Result<()> {
    param.same_shape(grad, "rmsprop_step gradient")?;
    param.same_shape(accumulator, "rmsprop_step accumulator")?;
    for (p, (g, v)) in param
        .data_mut()
        .iter_mut()
        .zip(grad.data().iter().zip(accumulator.data_mut()))
    {
        *v = decay * *v + (1.0 - decay) * g * g;
        *p -= learning_rate * g / (math::sqrt(*v) + epsilon);
    }
    Ok(())
}

/// Per-epoch record of the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    /// Mean training loss of each epoch.
    pub epoch_loss: Vec<f64>,
    /// Mean validation loss of each epoch; empty when no validation images
    /// were supplied.
    pub epoch_val_loss: Vec<f64>,
    /// Wall time per epoch in seconds (all zero without `std`).
    pub epoch_seconds: Vec<f64>,
}

/// Mean loss and mean parameter gradients of one batch. Gradients are
/// accumulated sample by sample in batch order.
pub fn batch_gradients(model: &CaeModel, batch: &[&Tensor]) -> Result<(f64, Vec<Tensor>)> {
    if batch.is_empty() {
        return Err(Error::Arg("batch must not be empty".into()));
    }
    let mut total: Option<Vec<Tensor>> = None;
    let mut loss_sum = 0.0;
    for image in batch {
        let trace = model.forward_trace(image)?;
        let (loss, grad_out) = mse_loss(&trace.output, image)?;
        loss_sum += loss;
        let grads = model.backward_trace(&trace, &grad_out)?;
        match &mut total {
            None => total = Some(grads),
            Some(acc) => {
                for (a, g) in acc.iter_mut().zip(&grads) {
                    for (av, gv) in a.data_mut().iter_mut().zip(g.data()) {
                        *av += gv;
                    }
                }
            }
        }
    }
    let scale = 1.0 / batch.len() as f64;
    let mut total = total.expect("batch checked non-empty");
    for t in &mut total {
        for v in t.data_mut() {
            *v *= scale;
        }
    }
    Ok((loss_sum * scale, total))
}

/// Mean reconstruction MSE over a set of images (forward only).
pub fn mean_loss(model: &CaeModel, images: &[Tensor]) -> Result<f64> {
    let mut sum = 0.0;
    for image in images {
        let recon = model.reconstruct(image)?;
        let (loss, _) = mse_loss(&recon, image)?;
        sum += loss;
    }
    Ok(sum / images.len().max(1) as f64)
}

/// Trains the model on `train_set` for the configured number of epochs.
///
/// Each epoch shuffles with the seeded PRNG, splits into batches of at most
/// `batch_size` (the final partial batch is kept), and applies one RMSprop
/// step per batch on the batch-averaged gradient. `val_set` is only used for
/// loss reporting. Aborts with a diagnostic error if the loss stops being
/// finite.
pub fn train(
    model: CaeModel,
    train_set: &[Tensor],
    val_set: &[Tensor],
    config: &TrainConfig,
) -> Result<(CaeModel, TrainHistory)> {
    config.validate()?;
    if train_set.is_empty() {
        return Err(Error::Arg("training set must not be empty".into()));
    }
    let mut model = model;
    let mut state = RmspropState::for_model(&model);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut history = TrainHistory {
        epoch_loss: Vec::with_capacity(config.epochs),
        epoch_val_loss: Vec::new(),
        epoch_seconds: Vec::with_capacity(config.epochs),
    };

    let mut order: Vec<usize> = (0..train_set.len()).collect();
    for epoch in 0..config.epochs {
        #[cfg(feature = "std")]
        let started = std::time::Instant::now();

        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for (batch_index, batch_ids) in order.chunks(config.batch_size).enumerate() {
            let batch: Vec<&Tensor> = batch_ids.iter().map(|&i| &train_set[i]).collect();
            let (batch_loss, grads) = batch_gradients(&model, &batch)?;
            if !batch_loss.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    batch: batch_index,
                    loss: batch_loss,
                });
            }
            loss_sum += batch_loss * batch.len() as f64;
            for ((param, grad), accum) in model
                .parameters_mut()
                .into_iter()
                .zip(&grads)
                .zip(&mut state.accumulators)
            {
                rmsprop_step(
                    param,
                    grad,
                    accum,
                    config.learning_rate,
                    config.rmsprop_decay,
                    config.rmsprop_epsilon,
                )?;
            }
        }
        history.epoch_loss.push(loss_sum / train_set.len() as f64);
        if !val_set.is_empty() {
            history.epoch_val_loss.push(mean_loss(&model, val_set)?);
        }

        #[cfg(feature = "std")]
        history.epoch_seconds.push(started.elapsed().as_secs_f64());
        #[cfg(not(feature = "std"))]
        history.epoch_seconds.push(0.0);
    }

    Ok((model, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CaeConfig;

    fn tiny_model(seed: u64) -> CaeModel {
        let config = CaeConfig {
            input_size: (3, 8, 8),
            encoder_channels: vec![2, 2, 2],
            kernel_size: 3,
        };
        CaeModel::build(&config, seed).unwrap()
    }

    fn tiny_images(count: usize) -> Vec<Tensor> {
        (0..count)
            .map(|i| {
                let data = (0..3 * 8 * 8)
                    .map(|j| ((i * 31 + j * 7) % 41) as f64 / 40.0)
                    .collect();
                Tensor::new(vec![3, 8, 8], data).unwrap()
            })
            .collect()
    }

    #[test]
    fn rmsprop_zero_gradient_keeps_param_and_decays_accumulator() {
        let mut p = Tensor::new(vec![2], vec![1.0, -2.0]).unwrap();
        let before = p.clone();
        let g = Tensor::zeros(vec![2]);
        let mut v = Tensor::new(vec![2], vec![0.4, 0.8]).unwrap();
        rmsprop_step(&mut p, &g, &mut v, 0.001, 0.9, 1e-8).unwrap();
        assert_eq!(p, before);
        assert!((v.data()[0] - 0.36).abs() < 1e-15);
        assert!((v.data()[1] - 0.72).abs() < 1e-15);
    }

    #[test]
    fn rmsprop_hand_evaluated_step() {
        let mut p = Tensor::new(vec![1], vec![0.0]).unwrap();
        let g = Tensor::new(vec![1], vec![1.0]).unwrap();
        let mut v = Tensor::zeros(vec![1]);
        rmsprop_step(&mut p, &g, &mut v, 0.001, 0.9, 1e-8).unwrap();
        assert!((v.data()[0] - 0.1).abs() < 1e-15);
        assert!((p.data()[0] + 3.16228e-3).abs() < 1e-7);
        // Second step with the same unit gradient: v = 0.9*0.1 + 0.1.
        rmsprop_step(&mut p, &g, &mut v, 0.001, 0.9, 1e-8).unwrap();
        assert!((v.data()[0] - 0.19).abs() < 1e-12);
    }

    #[test]
    fn rmsprop_step_size_approaches_learning_rate() {
        // With a constant gradient the accumulator converges to g^2, so the
        // per-step move approaches lr.
        let mut p = Tensor::new(vec![1], vec![0.0]).unwrap();
        let g = Tensor::new(vec![1], vec![3.0]).unwrap();
        let mut v = Tensor::zeros(vec![1]);
        let lr = 0.001;
        let mut last = p.data()[0];
        let mut step = 0.0;
        for _ in 0..1000 {
            rmsprop_step(&mut p, &g, &mut v, lr, 0.9, 1e-8).unwrap();
            step = last - p.data()[0];
            last = p.data()[0];
        }
        assert!((step - lr).abs() < 0.01 * lr, "final step {step}");
    }

    #[test]
    fn rmsprop_rejects_shape_mismatch() {
        let mut p = Tensor::zeros(vec![2]);
        let g = Tensor::zeros(vec![3]);
        let mut v = Tensor::zeros(vec![2]);
        assert!(rmsprop_step(&mut p, &g, &mut v, 0.001, 0.9, 1e-8).is_err());
    }

    #[test]
    fn train_is_deterministic() {
        let images = tiny_images(5);
        let config = TrainConfig {
            epochs: 3,
            batch_size: 2,
            seed: 11,
            ..TrainConfig::default()
        };
        let (m1, h1) = train(tiny_model(3), &images, &images[..2], &config).unwrap();
        let (m2, h2) = train(tiny_model(3), &images, &images[..2], &config).unwrap();
        assert_eq!(m1, m2);
        assert_eq!(h1.epoch_loss, h2.epoch_loss);
        assert_eq!(h1.epoch_val_loss, h2.epoch_val_loss);
        // Wall times are the one field allowed to differ between runs.
    }

    #[test]
    fn zero_learning_rate_is_identity() {
        let images = tiny_images(4);
        let model = tiny_model(5);
        let config = TrainConfig {
            epochs: 2,
            learning_rate: 0.0,
            batch_size: 2,
            ..TrainConfig::default()
        };
        let (trained, _) = train(model.clone(), &images, &[], &config).unwrap();
        assert_eq!(trained, model);
    }

    #[test]
    fn empty_train_set_is_rejected() {
        let err = train(tiny_model(0), &[], &[], &TrainConfig::default());
        assert!(matches!(err, Err(Error::Arg(_))));
    }

    #[test]
    fn loss_decreases_on_small_set() {
        let images = tiny_images(8);
        let config = TrainConfig {
            epochs: 10,
            batch_size: 4,
            seed: 2,
            ..TrainConfig::default()
        };
        let (_, history) = train(tiny_model(1), &images, &[], &config).unwrap();
        assert_eq!(history.epoch_loss.len(), 10);
        assert!(history.epoch_loss[9] < history.epoch_loss[0]);
    }

    #[test]
    fn history_length_matches_epochs() {
        let images = tiny_images(3);
        let config = TrainConfig {
            epochs: 4,
            batch_size: 2,
            ..TrainConfig::default()
        };
        let (_, history) = train(tiny_model(1), &images, &images[..1], &config).unwrap();
        assert_eq!(history.epoch_loss.len(), 4);
        assert_eq!(history.epoch_val_loss.len(), 4);
        assert_eq!(history.epoch_seconds.len(), 4);
    }
}
