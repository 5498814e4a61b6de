//! Dense tensors and the layer math the autoencoder is built from.
//!
//! All operations are pure functions over immutable inputs and loop in a
//! fixed order, so identical inputs give bit-identical outputs.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Dense N-dimensional array of `f64` values in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    /// Wraps a flat buffer; fails if the length does not match the shape.
    pub fn new(shape: impl Into<Vec<usize>>, data: Vec<f64>) -> Result<Self> {
        let shape = shape.into();
        if shape.is_empty() || shape.iter().any(|&d| d == 0) {
            return Err(Error::Shape(format!(
                "tensor dimensions must be positive, got {shape:?}"
            )));
        }
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::Shape(format!(
                "data length {} does not match shape {:?} ({} elements)",
                data.len(),
                shape,
                expected
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: impl Into<Vec<usize>>) -> Self {
        let shape = shape.into();
        let len = shape.iter().product();
        Self {
            shape,
            data: vec![0.0; len],
        }
    }

    pub fn filled(shape: impl Into<Vec<usize>>, value: f64) -> Self {
        let mut t = Self::zeros(shape);
        t.data.fill(value);
        t
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Interprets the tensor as `[channels, height, width]`.
    pub fn dims3(&self) -> Result<(usize, usize, usize)> {
        match *self.shape {
            [c, h, w] => Ok((c, h, w)),
            _ => Err(Error::Shape(format!(
                "expected a 3-d [channels, height, width] tensor, got shape {:?}",
                self.shape
            ))),
        }
    }

    /// Interprets the tensor as `[out_channels, in_channels, kh, kw]`.
    pub fn dims4(&self) -> Result<(usize, usize, usize, usize)> {
        match *self.shape {
            [o, c, kh, kw] => Ok((o, c, kh, kw)),
            _ => Err(Error::Shape(format!(
                "expected a 4-d weight tensor, got shape {:?}",
                self.shape
            ))),
        }
    }

    pub fn same_shape(&self, other: &Tensor, context: &str) -> Result<()> {
        if self.shape == other.shape {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "{context}: shapes {:?} and {:?} differ",
                self.shape, other.shape
            )))
        }
    }
}

/// Parameters of one 2-d convolution layer with symmetric zero padding.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvParams {
    /// `[out_channels, in_channels, k, k]`
    pub weights: Tensor,
    /// `[out_channels]`
    pub bias: Tensor,
    pub stride: usize,
    pub padding: usize,
}

impl ConvParams {
    pub fn new(weights: Tensor, bias: Tensor, stride: usize, padding: usize) -> Result<Self> {
        let (out_c, _, kh, kw) = weights.dims4()?;
        if kh != kw {
            return Err(Error::Shape(format!(
                "convolution kernels must be square, got {kh}x{kw}"
            )));
        }
        if bias.shape() != [out_c] {
            return Err(Error::Shape(format!(
                "bias shape {:?} does not match {out_c} output channels",
                bias.shape()
            )));
        }
        if stride == 0 {
            return Err(Error::Arg("stride must be at least 1".into()));
        }
        Ok(Self {
            weights,
            bias,
            stride,
            padding,
        })
    }

    pub fn out_channels(&self) -> usize {
        self.weights.shape()[0]
    }

    pub fn in_channels(&self) -> usize {
        self.weights.shape()[1]
    }

    pub fn kernel(&self) -> usize {
        self.weights.shape()[2]
    }

    /// Output spatial size: `floor((in + 2*padding - k)/stride) + 1`.
    pub fn output_size(&self, height: usize, width: usize) -> Result<(usize, usize)> {
        let k = self.kernel();
        let out = |dim: usize| -> Result<usize> {
            let padded = dim + 2 * self.padding;
            if padded < k {
                return Err(Error::Shape(format!(
                    "kernel {k} does not fit input extent {dim} with padding {}",
                    self.padding
                )));
            }
            Ok((padded - k) / self.stride + 1)
        };
        Ok((out(height)?, out(width)?))
    }
}

/// Valid output index range along one axis for a fixed kernel offset, such
/// that `pos*stride - padding + offset` stays inside `0..extent`.
fn axis_range(out_len: usize, extent: usize, stride: usize, padding: usize, offset: usize) -> (usize, usize) {
    let lo = if padding > offset {
        (padding - offset).div_ceil(stride)
    } else {
        0
    };
    let num = extent as i64 - 1 + padding as i64 - offset as i64;
    if num < 0 {
        return (1, 0); // empty
    }
    let hi = (num / stride as i64) as usize;
    (lo, hi.min(out_len.saturating_sub(1)))
}

fn check_conv_input(input: &Tensor, params: &ConvParams) -> Result<(usize, usize, usize)> {
    let (c_in, h, w) = input.dims3()?;
    if c_in != params.in_channels() {
        return Err(Error::Shape(format!(
            "input has {c_in} channels but the layer expects {}",
            params.in_channels()
        )));
    }
    Ok((c_in, h, w))
}

/// Direct 2-d convolution: `out[o,y,x] = bias[o] + sum input[c, y*s-p+i, x*s-p+j] * w[o,c,i,j]`
/// with out-of-range input indices contributing zero.
pub fn conv2d_forward(input: &Tensor, params: &ConvParams) -> Result<Tensor> {
    let (c_in, h, w) = check_conv_input(input, params)?;
    let (oh, ow) = params.output_size(h, w)?;
    let out_c = params.out_channels();
    let k = params.kernel();
    let stride = params.stride;
    let padding = params.padding;

    let mut out = vec![0.0f64; out_c * oh * ow];
    let wdata = params.weights.data();
    let bias = params.bias.data();
    let indata = input.data();

    for oc in 0..out_c {
        let plane = &mut out[oc * oh * ow..(oc + 1) * oh * ow];
        plane.fill(bias[oc]);
        for ic in 0..c_in {
            let in_plane = &indata[ic * h * w..(ic + 1) * h * w];
            for ki in 0..k {
                let (y_lo, y_hi) = axis_range(oh, h, stride, padding, ki);
                if y_lo > y_hi {
                    continue;
                }
                for kj in 0..k {
                    let wv = wdata[((oc * c_in + ic) * k + ki) * k + kj];
                    let (x_lo, x_hi) = axis_range(ow, w, stride, padding, kj);
                    if x_lo > x_hi {
                        continue;
                    }
                    let n = x_hi - x_lo + 1;
                    for y in y_lo..=y_hi {
                        let iy = y * stride + ki - padding;
                        let ix0 = x_lo * stride + kj - padding;
                        let orow = &mut plane[y * ow + x_lo..y * ow + x_lo + n];
                        let irow = &in_plane[iy * w..(iy + 1) * w];
                        if stride == 1 {
                            for (ov, iv) in orow.iter_mut().zip(&irow[ix0..ix0 + n]) {
                                *ov += wv * iv;
                            }
                        } else {
                            for (ov, iv) in orow.iter_mut().zip(irow[ix0..].iter().step_by(stride))
                            {
                                *ov += wv * iv;
                            }
                        }
                    }
                }
            }
        }
    }

    Tensor::new(vec![out_c, oh, ow], out)
}

/// Gradients of [`conv2d_forward`] with respect to its input and parameters.
#[derive(Debug, Clone)]
pub struct ConvGrads {
    pub input: Tensor,
    pub weights: Tensor,
    pub bias: Tensor,
}

/// Exact analytic gradients of the convolution.
///
/// `upstream` must have the forward output shape; `grad_bias[o]` is the sum
/// of the upstream plane for channel `o`.
pub fn conv2d_backward(input: &Tensor, params: &ConvParams, upstream: &Tensor) -> Result<ConvGrads> {
    let (c_in, h, w) = check_conv_input(input, params)?;
    let (oh, ow) = params.output_size(h, w)?;
    let out_c = params.out_channels();
    let k = params.kernel();
    let stride = params.stride;
    let padding = params.padding;

    if upstream.shape() != [out_c, oh, ow] {
        return Err(Error::Shape(format!(
            "upstream gradient shape {:?} does not match forward output [{out_c}, {oh}, {ow}]",
            upstream.shape()
        )));
    }

    let wdata = params.weights.data();
    let indata = input.data();
    let updata = upstream.data();

    let mut grad_input = vec![0.0f64; indata.len()];
    let mut grad_weights = vec![0.0f64; wdata.len()];
    let mut grad_bias = vec![0.0f64; out_c];

    for oc in 0..out_c {
        let up_plane = &updata[oc * oh * ow..(oc + 1) * oh * ow];
        grad_bias[oc] = up_plane.iter().sum();
        for ic in 0..c_in {
            let in_plane = &indata[ic * h * w..(ic + 1) * h * w];
            let gi_plane = &mut grad_input[ic * h * w..(ic + 1) * h * w];
            for ki in 0..k {
                let (y_lo, y_hi) = axis_range(oh, h, stride, padding, ki);
                if y_lo > y_hi {
                    continue;
                }
                for kj in 0..k {
                    let widx = ((oc * c_in + ic) * k + ki) * k + kj;
                    let wv = wdata[widx];
                    let (x_lo, x_hi) = axis_range(ow, w, stride, padding, kj);
                    if x_lo > x_hi {
                        continue;
                    }
                    let n = x_hi - x_lo + 1;
                    let mut acc = 0.0f64;
                    for y in y_lo..=y_hi {
                        let iy = y * stride + ki - padding;
                        let ix0 = x_lo * stride + kj - padding;
                        let urow = &up_plane[y * ow + x_lo..y * ow + x_lo + n];
                        let ibase = iy * w;
                        if stride == 1 {
                            let irow = &in_plane[ibase + ix0..ibase + ix0 + n];
                            let grow = &mut gi_plane[ibase + ix0..ibase + ix0 + n];
                            for ((uv, iv), gv) in urow.iter().zip(irow).zip(grow) {
                                acc += uv * iv;
                                *gv += wv * uv;
                            }
                        } else {
                            let mut ix = ibase + ix0;
                            for uv in urow {
                                acc += uv * in_plane[ix];
                                gi_plane[ix] += wv * uv;
                                ix += stride;
                            }
                        }
                    }
                    grad_weights[widx] += acc;
                }
            }
        }
    }

    Ok(ConvGrads {
        input: Tensor::new(input.shape().to_vec(), grad_input)?,
        weights: Tensor::new(params.weights.shape().to_vec(), grad_weights)?,
        bias: Tensor::new(vec![out_c], grad_bias)?,
    })
}

/// Elementwise `max(0, x)`.
pub fn relu(input: &Tensor) -> Tensor {
    let data = input.data().iter().map(|&x| x.max(0.0)).collect();
    Tensor {
        shape: input.shape().to_vec(),
        data,
    }
}

/// Passes upstream gradient where the forward input was strictly positive.
/// The derivative at exactly zero is taken as zero.
pub fn relu_backward(input: &Tensor, upstream: &Tensor) -> Result<Tensor> {
    input.same_shape(upstream, "relu_backward")?;
    let data = input
        .data()
        .iter()
        .zip(upstream.data())
        .map(|(&x, &g)| if x > 0.0 { g } else { 0.0 })
        .collect();
    Ok(Tensor {
        shape: input.shape().to_vec(),
        data,
    })
}

fn sigmoid_scalar(x: f64) -> f64 {
    // Split on the sign so the exponential never overflows.
    if x >= 0.0 {
        1.0 / (1.0 + math::exp(-x))
    } else {
        let e = math::exp(x);
        e / (1.0 + e)
    }
}

/// Elementwise logistic function `1/(1+e^-x)`.
pub fn sigmoid(input: &Tensor) -> Tensor {
    let data = input.data().iter().map(|&x| sigmoid_scalar(x)).collect();
    Tensor {
        shape: input.shape().to_vec(),
        data,
    }
}

/// Backward pass of [`sigmoid`], expressed through the forward *output*:
/// `upstream * out * (1 - out)`.
pub fn sigmoid_backward(output: &Tensor, upstream: &Tensor) -> Result<Tensor> {
    output.same_shape(upstream, "sigmoid_backward")?;
    let data = output
        .data()
        .iter()
        .zip(upstream.data())
        .map(|(&y, &g)| g * y * (1.0 - y))
        .collect();
    Ok(Tensor {
        shape: output.shape().to_vec(),
        data,
    })
}

/// Replicates each pixel into an `factor x factor` block.
pub fn upsample_nearest(input: &Tensor, factor: usize) -> Result<Tensor> {
    if factor == 0 {
        return Err(Error::Arg("upsample factor must be at least 1".into()));
    }
    let (c, h, w) = input.dims3()?;
    let (fh, fw) = (h * factor, w * factor);
    let mut out = vec![0.0f64; c * fh * fw];
    let indata = input.data();
    for ch in 0..c {
        let in_plane = &indata[ch * h * w..(ch + 1) * h * w];
        let out_plane = &mut out[ch * fh * fw..(ch + 1) * fh * fw];
        for y in 0..fh {
            let irow = &in_plane[(y / factor) * w..(y / factor + 1) * w];
            let orow = &mut out_plane[y * fw..(y + 1) * fw];
            for (x, ov) in orow.iter_mut().enumerate() {
                *ov = irow[x / factor];
            }
        }
    }
    Tensor::new(vec![c, fh, fw], out)
}

/// Adjoint of [`upsample_nearest`]: sums the upstream gradient over each
/// `factor x factor` block.
pub fn upsample_backward(upstream: &Tensor, factor: usize) -> Result<Tensor> {
    if factor == 0 {
        return Err(Error::Arg("upsample factor must be at least 1".into()));
    }
    let (c, fh, fw) = upstream.dims3()?;
    if fh % factor != 0 || fw % factor != 0 {
        return Err(Error::Shape(format!(
            "upstream extent {fh}x{fw} is not a multiple of factor {factor}"
        )));
    }
    let (h, w) = (fh / factor, fw / factor);
    let mut out = vec![0.0f64; c * h * w];
    let updata = upstream.data();
    for ch in 0..c {
        let up_plane = &updata[ch * fh * fw..(ch + 1) * fh * fw];
        let out_plane = &mut out[ch * h * w..(ch + 1) * h * w];
        for y in 0..fh {
            let orow = &mut out_plane[(y / factor) * w..(y / factor + 1) * w];
            let urow = &up_plane[y * fw..(y + 1) * fw];
            for (x, uv) in urow.iter().enumerate() {
                orow[x / factor] += uv;
            }
        }
    }
    Tensor::new(vec![c, h, w], out)
}

/// Mean squared error and its gradient with respect to `pred`:
/// `loss = mean((pred - target)^2)`, `grad = 2*(pred - target)/N`.
pub fn mse_loss(pred: &Tensor, target: &Tensor) -> Result<(f64, Tensor)> {
    pred.same_shape(target, "mse_loss")?;
    let n = pred.len() as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0f64; pred.len()];
    for (g, (&p, &t)) in grad.iter_mut().zip(pred.data().iter().zip(target.data())) {
        let d = p - t;
        loss += d * d;
        *g = 2.0 * d / n;
    }
    Ok((loss / n, Tensor::new(pred.shape().to_vec(), grad)?))
}
