//! The convolutional autoencoder: configuration, assembly, reconstruction,
//! anomaly scoring, and threshold classification.
//!
//! The encoder halves the spatial extent three times with stride-2
//! convolutions; the decoder mirrors it with three nearest-neighbor x2
//! upsamplings, each followed by a stride-1 convolution. All hidden
//! activations are ReLU; the final layer is a sigmoid so outputs live in
//! (0, 1) like the normalized pixel targets.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use core::fmt;
use core::str::FromStr;

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;
use crate::tensor::{
    conv2d_backward, conv2d_forward, relu, relu_backward, sigmoid, sigmoid_backward,
    upsample_backward, upsample_nearest, ConvParams, Tensor,
};

/// Class label: `client` is the genuine class the model is trained on,
/// `imposter` is anything to be rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Client,
    Imposter,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Client => "client",
            Label::Imposter => "imposter",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "client" => Ok(Label::Client),
            "imposter" => Ok(Label::Imposter),
            other => Err(Error::Arg(format!(
                "unknown label {other:?} (expected \"client\" or \"imposter\")"
            ))),
        }
    }
}

/// Architecture hyperparameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CaeConfig {
    /// Input layout `(channels, height, width)`; channels must be 3 and the
    /// spatial extent divisible by 8 (three stride-2 halvings).
    pub input_size: (usize, usize, usize),
    /// Output channels of the three encoder stages.
    pub encoder_channels: Vec<usize>,
    /// Square kernel extent; must be odd so same-padding is symmetric.
    pub kernel_size: usize,
}

impl Default for CaeConfig {
    fn default() -> Self {
        Self {
            input_size: (3, 64, 64),
            encoder_channels: vec![16, 32, 64],
            kernel_size: 3,
        }
    }
}

impl CaeConfig {
    pub fn validate(&self) -> Result<()> {
        let (c, h, w) = self.input_size;
        if c != 3 {
            return Err(Error::Config(format!("input must have 3 channels, got {c}")));
        }
        if h < 8 || w < 8 || h % 8 != 0 || w % 8 != 0 {
            return Err(Error::Config(format!(
                "input extent {h}x{w} must be at least 8 and divisible by 8"
            )));
        }
        if self.encoder_channels.len() != 3 {
            return Err(Error::Config(format!(
                "exactly 3 encoder stages required, got {}",
                self.encoder_channels.len()
            )));
        }
        if self.encoder_channels.iter().any(|&ch| ch == 0) {
            return Err(Error::Config("encoder channel counts must be positive".into()));
        }
        if self.kernel_size == 0 || self.kernel_size % 2 == 0 {
            return Err(Error::Config(format!(
                "kernel size must be odd and positive, got {}",
                self.kernel_size
            )));
        }
        Ok(())
    }

    /// Shape of the bottleneck produced by the encoder.
    pub fn latent_shape(&self) -> (usize, usize, usize) {
        let (_, h, w) = self.input_size;
        (self.encoder_channels[2], h / 8, w / 8)
    }

    /// Output shapes of the three encoder stages.
    pub fn encoder_stage_shapes(&self) -> Vec<(usize, usize, usize)> {
        let (_, mut h, mut w) = self.input_size;
        self.encoder_channels
            .iter()
            .map(|&c| {
                h /= 2;
                w /= 2;
                (c, h, w)
            })
            .collect()
    }
}

/// A calibrated decision threshold in reconstruction-error units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub value: f64,
    /// Where the threshold came from, e.g. `"EER on validation"`.
    pub provenance: String,
}

impl Threshold {
    pub fn new(value: f64, provenance: impl Into<String>) -> Result<Self> {
        if value.is_nan() || value < 0.0 {
            return Err(Error::Arg(format!(
                "threshold must be non-negative, got {value}"
            )));
        }
        Ok(Self {
            value,
            provenance: provenance.into(),
        })
    }
}

/// The autoencoder: three stride-2 encoder convolutions and three
/// upsample-then-convolve decoder stages.
#[derive(Debug, Clone, PartialEq)]
pub struct CaeModel {
    config: CaeConfig,
    encoder: Vec<ConvParams>,
    decoder: Vec<ConvParams>,
}

/// Activations recorded during a forward pass, enough to run the exact
/// backward pass.
pub(crate) struct ForwardTrace {
    /// Input seen by each of the six convolutions (post-upsample for the
    /// decoder stages).
    conv_inputs: Vec<Tensor>,
    /// Convolution outputs before their activation.
    pre_activations: Vec<Tensor>,
    pub output: Tensor,
}

fn init_conv(rng: &mut ChaCha8Rng, out_c: usize, in_c: usize, k: usize, stride: usize) -> ConvParams {
    // Fan-in scaled uniform init: bound = sqrt(6 / (in_c * k * k)).
    let fan_in = (in_c * k * k) as f64;
    let bound = math::sqrt(6.0 / fan_in);
    let dist = Uniform::new(-bound, bound);
    let weights: Vec<f64> = (0..out_c * in_c * k * k).map(|_| dist.sample(rng)).collect();
    ConvParams {
        weights: Tensor::new(vec![out_c, in_c, k, k], weights).expect("weight buffer sized above"),
        bias: Tensor::zeros(vec![out_c]),
        stride,
        padding: (k - 1) / 2,
    }
}

impl CaeModel {
    /// Builds a model with fan-in-scaled uniform weights drawn from a
    /// deterministic PRNG; the same `(config, seed)` pair always yields a
    /// bit-identical model. Biases start at zero.
    pub fn build(config: &CaeConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = config.kernel_size;
        let chans = [
            3,
            config.encoder_channels[0],
            config.encoder_channels[1],
            config.encoder_channels[2],
        ];
        let encoder = (0..3)
            .map(|i| init_conv(&mut rng, chans[i + 1], chans[i], k, 2))
            .collect();
        let decoder = (0..3)
            .map(|i| init_conv(&mut rng, chans[2 - i], chans[3 - i], k, 1))
            .collect();
        Ok(Self {
            config: config.clone(),
            encoder,
            decoder,
        })
    }

    /// Reassembles a model from explicit layer parameters (checkpoint load).
    pub(crate) fn from_parts(
        config: CaeConfig,
        encoder: Vec<ConvParams>,
        decoder: Vec<ConvParams>,
    ) -> Result<Self> {
        config.validate()?;
        let reference = CaeModel::build(&config, 0)?;
        let check = |got: &[ConvParams], want: &[ConvParams], part: &str| -> Result<()> {
            if got.len() != want.len() {
                return Err(Error::Config(format!(
                    "{part} has {} stages, expected {}",
                    got.len(),
                    want.len()
                )));
            }
            for (i, (g, w)) in got.iter().zip(want).enumerate() {
                if g.weights.shape() != w.weights.shape()
                    || g.bias.shape() != w.bias.shape()
                    || g.stride != w.stride
                    || g.padding != w.padding
                {
                    return Err(Error::Config(format!(
                        "{part} stage {i} does not match the configured architecture"
                    )));
                }
            }
            Ok(())
        };
        check(&encoder, &reference.encoder, "encoder")?;
        check(&decoder, &reference.decoder, "decoder")?;
        Ok(Self {
            config,
            encoder,
            decoder,
        })
    }

    pub fn config(&self) -> &CaeConfig {
        &self.config
    }

    pub fn encoder(&self) -> &[ConvParams] {
        &self.encoder
    }

    pub fn decoder(&self) -> &[ConvParams] {
        &self.decoder
    }

    /// All parameter tensors in declaration order:
    /// `enc1.w, enc1.b, ..., dec3.w, dec3.b`.
    pub fn parameters(&self) -> Vec<&Tensor> {
        self.layers().iter().flat_map(|l| [&l.weights, &l.bias]).collect()
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut Tensor> {
        self.encoder
            .iter_mut()
            .chain(self.decoder.iter_mut())
            .flat_map(|l| [&mut l.weights, &mut l.bias])
            .collect()
    }

    pub fn param_count(&self) -> usize {
        self.parameters().iter().map(|t| t.len()).sum()
    }

    fn layers(&self) -> Vec<&ConvParams> {
        self.encoder.iter().chain(self.decoder.iter()).collect()
    }

    fn check_input(&self, image: &Tensor) -> Result<()> {
        let (c, h, w) = self.config.input_size;
        if image.shape() != [c, h, w] {
            return Err(Error::Shape(format!(
                "input shape {:?} does not match the model input [{c}, {h}, {w}]",
                image.shape()
            )));
        }
        Ok(())
    }

    pub(crate) fn forward_trace(&self, image: &Tensor) -> Result<ForwardTrace> {
        self.check_input(image)?;
        let mut conv_inputs = Vec::with_capacity(6);
        let mut pre_activations = Vec::with_capacity(6);
        let mut current = image.clone();
        for stage in &self.encoder {
            let z = conv2d_forward(&current, stage)?;
            conv_inputs.push(current);
            current = relu(&z);
            pre_activations.push(z);
        }
        for (i, stage) in self.decoder.iter().enumerate() {
            let up = upsample_nearest(&current, 2)?;
            let z = conv2d_forward(&up, stage)?;
            conv_inputs.push(up);
            current = if i < 2 { relu(&z) } else { sigmoid(&z) };
            pre_activations.push(z);
        }
        Ok(ForwardTrace {
            conv_inputs,
            pre_activations,
            output: current,
        })
    }

    /// Gradients of a scalar loss with respect to every parameter, given the
    /// loss gradient at the output. Returned in [`Self::parameters`] order.
    pub(crate) fn backward_trace(
        &self,
        trace: &ForwardTrace,
        grad_output: &Tensor,
    ) -> Result<Vec<Tensor>> {
        let mut per_layer: Vec<Option<(Tensor, Tensor)>> = vec![None; 6];
        let mut grad = sigmoid_backward(&trace.output, grad_output)?;
        for idx in (0..6).rev() {
            let params = if idx < 3 {
                &self.encoder[idx]
            } else {
                &self.decoder[idx - 3]
            };
            let grads = conv2d_backward(&trace.conv_inputs[idx], params, &grad)?;
            per_layer[idx] = Some((grads.weights, grads.bias));
            if idx == 0 {
                break;
            }
            let mut upstream = grads.input;
            if idx >= 3 {
                upstream = upsample_backward(&upstream, 2)?;
            }
            grad = relu_backward(&trace.pre_activations[idx - 1], &upstream)?;
        }
        Ok(per_layer
            .into_iter()
            .flat_map(|pair| {
                let (w, b) = pair.expect("all six layers visited");
                [w, b]
            })
            .collect())
    }

    /// Encodes and decodes `image`; the output has exactly the input shape
    /// and, being sigmoid output, lies strictly inside (0, 1).
    pub fn reconstruct(&self, image: &Tensor) -> Result<Tensor> {
        Ok(self.forward_trace(image)?.output)
    }

    /// Euclidean distance between `image` and its reconstruction over all
    /// components: `sqrt(sum((x - x_hat)^2))`.
    pub fn reconstruction_error(&self, image: &Tensor) -> Result<f64> {
        let recon = self.reconstruct(image)?;
        let sum: f64 = image
            .data()
            .iter()
            .zip(recon.data())
            .map(|(&x, &r)| (x - r) * (x - r))
            .sum();
        Ok(math::sqrt(sum))
    }

    /// Accepts as client iff the reconstruction error is strictly below the
    /// threshold; ties reject.
    pub fn classify(&self, image: &Tensor, threshold: &Threshold) -> Result<Label> {
        let err = self.reconstruction_error(image)?;
        Ok(if err < threshold.value {
            Label::Client
        } else {
            Label::Imposter
        })
    }
}
