//! 8-bit RGB rasters and normalization of pre-cropped face images into
//! model input tensors.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::tensor::Tensor;

/// Interleaved 8-bit RGB image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl Raster {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Arg(format!(
                "raster dimensions must be positive, got {width}x{height}"
            )));
        }
        Ok(Self {
            width,
            height,
            data: vec![0; width * height * 3],
        })
    }

    pub fn from_rgb8(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != width * height * 3 {
            return Err(Error::Arg(format!(
                "rgb buffer of {} bytes does not match {width}x{height}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = (y * self.width + x) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }
}

/// Center-crops to a square over the shorter side, bilinearly resizes to
/// `size` x `size`, and scales to [0, 1], producing a `[3, size, size]`
/// tensor. Inputs smaller than 8x8 are rejected as degenerate.
pub fn normalize_face(image: &Raster, size: usize) -> Result<Tensor> {
    if size == 0 {
        return Err(Error::Arg("target size must be positive".into()));
    }
    if image.width < 8 || image.height < 8 {
        return Err(Error::Arg(format!(
            "degenerate image: {}x{} is below the 8x8 minimum",
            image.width, image.height
        )));
    }
    let side = image.width.min(image.height);
    let x_off = (image.width - side) / 2;
    let y_off = (image.height - side) / 2;

    let scale = side as f64 / size as f64;
    let mut out = vec![0.0f64; 3 * size * size];
    for y in 0..size {
        let sy = ((y as f64 + 0.5) * scale - 0.5).clamp(0.0, (side - 1) as f64);
        let y0 = math::floor(sy) as usize;
        let y1 = (y0 + 1).min(side - 1);
        let fy = sy - y0 as f64;
        for x in 0..size {
            let sx = ((x as f64 + 0.5) * scale - 0.5).clamp(0.0, (side - 1) as f64);
            let x0 = math::floor(sx) as usize;
            let x1 = (x0 + 1).min(side - 1);
            let fx = sx - x0 as f64;
            let p00 = image.pixel(x_off + x0, y_off + y0);
            let p01 = image.pixel(x_off + x1, y_off + y0);
            let p10 = image.pixel(x_off + x0, y_off + y1);
            let p11 = image.pixel(x_off + x1, y_off + y1);
            for c in 0..3 {
                let top = p00[c] as f64 * (1.0 - fx) + p01[c] as f64 * fx;
                let bottom = p10[c] as f64 * (1.0 - fx) + p11[c] as f64 * fx;
                let v = top * (1.0 - fy) + bottom * fy;
                out[c * size * size + y * size + x] = v / 255.0;
            }
        }
    }
    Tensor::new(vec![3, size, size], out)
}
