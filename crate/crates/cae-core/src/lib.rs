//! Building blocks for one-class anomaly detection with a convolutional
//! autoencoder.
//!
//! The crate is pure computation: dense tensors with the forward and backward
//! passes of every layer the autoencoder needs, model assembly and scoring,
//! an RMSprop training loop, checkpoint encoding, biometric evaluation
//! metrics (ROC/AUC/EER/HTER), and deterministic synthetic image domains.
//! File and terminal handling live in the companion `cae-tools` crate.
//!
//! Everything is deterministic: a seed fully fixes weight initialization,
//! batch shuffling, and synthetic image content, and all reductions run in a
//! fixed order, so identical inputs produce bit-identical outputs.
//!
//! The crate is `no_std`-compatible (`alloc` required): disable default
//! features and enable `libm` for float math without the standard library.

#![cfg_attr(not(feature = "std"), no_std)]

#[cfg(not(any(feature = "std", feature = "libm")))]
compile_error!("cae-core requires either the `std` or the `libm` feature");

extern crate alloc;

pub mod check;
pub mod checkpoint;
mod error;
mod math;
pub mod metrics;
pub mod model;
pub mod raster;
pub mod synth;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
pub use metrics::{OperatingPoint, RocCurve, ScoreSet};
pub use model::{CaeConfig, CaeModel, Label, Threshold};
pub use raster::Raster;
pub use synth::SynthDomainSpec;
pub use tensor::{ConvParams, Tensor};
pub use train::{RmspropState, TrainConfig, TrainHistory};
