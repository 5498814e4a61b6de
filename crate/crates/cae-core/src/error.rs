use alloc::string::String;
use core::fmt;

/// Errors produced by the core library.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Tensor shapes do not line up for the requested operation.
    Shape(String),
    /// Invalid model or training configuration.
    Config(String),
    /// Invalid argument outside of shape and configuration problems.
    Arg(String),
    /// A metric cannot be computed from the given score set.
    Metric(String),
    /// Malformed checkpoint bytes; `offset` is the byte position at which
    /// decoding failed.
    Format { offset: usize, message: String },
    /// Training aborted because the loss stopped being finite.
    NonFiniteLoss { epoch: usize, batch: usize, loss: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Shape(msg) => write!(f, "shape error: {msg}"),
            Error::Config(msg) => write!(f, "config error: {msg}"),
            Error::Arg(msg) => write!(f, "argument error: {msg}"),
            Error::Metric(msg) => write!(f, "metric error: {msg}"),
            Error::Format { offset, message } => {
                write!(f, "format error at byte {offset}: {message}")
            }
            Error::NonFiniteLoss { epoch, batch, loss } => write!(
                f,
                "training diverged: non-finite loss {loss} in epoch {epoch}, batch {batch}"
            ),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
