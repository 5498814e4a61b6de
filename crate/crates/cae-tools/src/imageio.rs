//! Image file handling: PNG (8-bit RGB) read and write, PPM (P6) read.

use std::path::Path;

use cae_core::Raster;
use image::ImageFormat;

use crate::error::{PipelineError, Result};

fn format_for(path: &Path) -> Result<ImageFormat> {
    let ext = path
        .extension()
        .map(|e| e.to_string_lossy().to_ascii_lowercase())
        .unwrap_or_default();
    match ext.as_str() {
        "png" => Ok(ImageFormat::Png),
        "ppm" | "pnm" => Ok(ImageFormat::Pnm),
        other => Err(PipelineError::Decode {
            path: path.to_path_buf(),
            message: format!("unsupported image format {other:?} (png and ppm are accepted)"),
        }),
    }
}

/// Decodes a PNG or PPM file into an RGB raster.
pub fn load_raster(path: &Path) -> Result<Raster> {
    let format = format_for(path)?;
    let bytes = std::fs::read(path).map_err(|e| PipelineError::io(path, e))?;
    let img = image::load_from_memory_with_format(&bytes, format).map_err(|e| {
        PipelineError::Decode {
            path: path.to_path_buf(),
            message: e.to_string(),
        }
    })?;
    let rgb = img.to_rgb8();
    Raster::from_rgb8(rgb.width() as usize, rgb.height() as usize, rgb.into_raw()).map_err(|e| {
        PipelineError::Decode {
            path: path.to_path_buf(),
            message: e.to_string(),
        }
    })
}

/// Writes a raster as an 8-bit RGB PNG.
pub fn save_png(path: &Path, raster: &Raster) -> Result<()> {
    let buffer: image::RgbImage = image::ImageBuffer::from_raw(
        raster.width() as u32,
        raster.height() as u32,
        raster.data().to_vec(),
    )
    .expect("raster buffer matches its dimensions");
    buffer
        .save_with_format(path, ImageFormat::Png)
        .map_err(|e| PipelineError::Decode {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_raster() -> Raster {
        let mut r = Raster::new(16, 12).unwrap();
        for (i, b) in r.data_mut().iter_mut().enumerate() {
            *b = (i * 7 % 256) as u8;
        }
        r
    }

    #[test]
    fn png_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.png");
        let original = sample_raster();
        save_png(&path, &original).unwrap();
        let loaded = load_raster(&path).unwrap();
        assert_eq!(loaded, original);
    }

    #[test]
    fn ppm_p6_is_accepted() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.ppm");
        let original = sample_raster();
        let mut bytes = format!("P6\n{} {}\n255\n", original.width(), original.height()).into_bytes();
        bytes.extend_from_slice(original.data());
        std::fs::write(&path, bytes).unwrap();
        let loaded = load_raster(&path).unwrap();
        assert_eq!(loaded, original);
    }

    #[test]
    fn unsupported_extension_is_rejected() {
        let err = load_raster(Path::new("face.jpg")).unwrap_err();
        assert!(err.to_string().contains("unsupported image format"), "{err}");
    }

    #[test]
    fn corrupt_png_is_a_decode_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("broken.png");
        std::fs::write(&path, b"not a png at all").unwrap();
        assert!(matches!(
            load_raster(&path),
            Err(PipelineError::Decode { .. })
        ));
    }
}
