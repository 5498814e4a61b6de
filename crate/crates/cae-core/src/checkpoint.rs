//! Binary checkpoint codec.
//!
//! Layout: magic `CAE1`, format version (u32 LE), length-prefixed UTF-8 JSON
//! header (u32 LE length; config, layer list with shapes, optimizer-state
//! flag), every parameter tensor as little-endian `f32` in declaration
//! order, optionally the RMSprop accumulators in the same order, and a
//! trailing CRC32 of everything before it (u32 LE).
//!
//! Weights are stored at 32-bit precision; a decode therefore reproduces an
//! encoded model exactly once it has been through one round trip.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CaeConfig, CaeModel};
use crate::tensor::{ConvParams, Tensor};
use crate::train::RmspropState;

pub const MAGIC: [u8; 4] = *b"CAE1";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct LayerDesc {
    name: String,
    weights: Vec<usize>,
    bias: Vec<usize>,
    stride: usize,
    padding: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    config: CaeConfig,
    layers: Vec<LayerDesc>,
    optimizer_state: bool,
}

fn layer_descs(model: &CaeModel) -> Vec<LayerDesc> {
    let named = model
        .encoder()
        .iter()
        .enumerate()
        .map(|(i, l)| (format!("encoder.{i}"), l))
        .chain(
            model
                .decoder()
                .iter()
                .enumerate()
                .map(|(i, l)| (format!("decoder.{i}"), l)),
        );
    named
        .map(|(name, layer)| LayerDesc {
            name,
            weights: layer.weights.shape().to_vec(),
            bias: layer.bias.shape().to_vec(),
            stride: layer.stride,
            padding: layer.padding,
        })
        .collect()
}

fn push_tensor_f32(out: &mut Vec<u8>, tensor: &Tensor) {
    for &v in tensor.data() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
}

/// Serializes the model (and optionally optimizer state) to checkpoint bytes.
pub fn encode(model: &CaeModel, state: Option<&RmspropState>) -> Vec<u8> {
    let header = Header {
        config: model.config().clone(),
        layers: layer_descs(model),
        optimizer_state: state.is_some(),
    };
    let header_json = serde_json::to_vec(&header).expect("header serializes");

    let mut out = Vec::new();
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(header_json.len() as u32).to_le_bytes());
    out.extend_from_slice(&header_json);
    for tensor in model.parameters() {
        push_tensor_f32(&mut out, tensor);
    }
    if let Some(state) = state {
        for tensor in state.accumulators() {
            push_tensor_f32(&mut out, tensor);
        }
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Format {
                offset: self.bytes.len(),
                message: format!("truncated while reading {what}"),
            });
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u32le(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn tensor_f32(&mut self, shape: &[usize], what: &str) -> Result<Tensor> {
        let count: usize = shape.iter().product();
        let raw = self.take(count * 4, what)?;
        let data: Vec<f64> = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        Tensor::new(shape.to_vec(), data).map_err(|e| Error::Format {
            offset: self.pos,
            message: format!("invalid tensor for {what}: {e}"),
        })
    }
}

fn read_layers(reader: &mut Reader<'_>, descs: &[LayerDesc]) -> Result<Vec<ConvParams>> {
    let mut layers = Vec::with_capacity(descs.len());
    for desc in descs {
        let weights = reader.tensor_f32(&desc.weights, &desc.name)?;
        let bias = reader.tensor_f32(&desc.bias, &desc.name)?;
        let at = reader.pos;
        layers.push(
            ConvParams::new(weights, bias, desc.stride, desc.padding).map_err(|e| {
                Error::Format {
                    offset: at,
                    message: format!("layer {}: {e}", desc.name),
                }
            })?,
        );
    }
    Ok(layers)
}

/// Decodes checkpoint bytes back into a model and, when stored, the RMSprop
/// state. Rejects bad magic, unknown versions, truncation, checksum
/// mismatches, and headers inconsistent with their own configuration.
pub fn decode(bytes: &[u8]) -> Result<(CaeModel, Option<RmspropState>)> {
    let mut reader = Reader { bytes, pos: 0 };
    let magic = reader.take(4, "magic")?;
    if magic != MAGIC {
        return Err(Error::Format {
            offset: 0,
            message: format!("bad magic {magic:02x?}, expected {MAGIC:02x?}"),
        });
    }
    let version = reader.u32le("format version")?;
    if version != FORMAT_VERSION {
        return Err(Error::Format {
            offset: 4,
            message: format!("unsupported format version {version}"),
        });
    }

    if bytes.len() < reader.pos + 4 {
        return Err(Error::Format {
            offset: bytes.len(),
            message: "truncated before checksum".into(),
        });
    }
    let body_end = bytes.len() - 4;
    let stored = u32::from_le_bytes([
        bytes[body_end],
        bytes[body_end + 1],
        bytes[body_end + 2],
        bytes[body_end + 3],
    ]);
    let computed = crc32fast::hash(&bytes[..body_end]);
    if stored != computed {
        return Err(Error::Format {
            offset: body_end,
            message: format!("crc mismatch: stored {stored:08x}, computed {computed:08x}"),
        });
    }

    let header_len = reader.u32le("header length")? as usize;
    let header_start = reader.pos;
    if header_start + header_len > body_end {
        return Err(Error::Format {
            offset: header_start,
            message: format!("header length {header_len} exceeds checkpoint size"),
        });
    }
    let header: Header =
        serde_json::from_slice(reader.take(header_len, "header JSON")?).map_err(|e| {
            Error::Format {
                offset: header_start,
                message: format!("invalid header JSON: {e}"),
            }
        })?;
    if header.layers.len() != 6 {
        return Err(Error::Format {
            offset: header_start,
            message: format!("expected 6 layers in header, found {}", header.layers.len()),
        });
    }

    let encoder = read_layers(&mut reader, &header.layers[..3])?;
    let decoder = read_layers(&mut reader, &header.layers[3..])?;
    let model_end = reader.pos;
    let model = CaeModel::from_parts(header.config, encoder, decoder).map_err(|e| Error::Format {
        offset: model_end,
        message: format!("{e}"),
    })?;

    let state = if header.optimizer_state {
        let mut accumulators = Vec::with_capacity(12);
        for desc in &header.layers {
            accumulators.push(reader.tensor_f32(&desc.weights, "optimizer state")?);
            accumulators.push(reader.tensor_f32(&desc.bias, "optimizer state")?);
        }
        Some(RmspropState::from_tensors(accumulators))
    } else {
        None
    };

    if reader.pos != body_end {
        let message = if reader.pos < body_end {
            format!("{} unexpected trailing bytes", body_end - reader.pos)
        } else {
            format!("tensor data overruns into checksum by {} bytes", reader.pos - body_end)
        };
        return Err(Error::Format {
            offset: reader.pos.min(body_end),
            message,
        });
    }
    Ok((model, state))
}
