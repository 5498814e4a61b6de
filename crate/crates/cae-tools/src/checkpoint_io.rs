//! Checkpoint files: the binary codec from `cae_core::checkpoint` plus IO.

use std::path::Path;

use cae_core::{checkpoint, CaeModel, RmspropState};

use crate::error::{PipelineError, Result};

pub fn save_checkpoint(path: &Path, model: &CaeModel, state: Option<&RmspropState>) -> Result<()> {
    let bytes = checkpoint::encode(model, state);
    std::fs::write(path, bytes).map_err(|e| PipelineError::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<CaeModel> {
    let bytes = std::fs::read(path).map_err(|e| PipelineError::io(path, e))?;
    let (model, _state) = checkpoint::decode(&bytes).map_err(|e| PipelineError::Checkpoint {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use cae_core::CaeConfig;

    #[test]
    fn file_round_trip_preserves_scores() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.cae1");
        let config = CaeConfig {
            input_size: (3, 16, 16),
            encoder_channels: vec![2, 3, 4],
            kernel_size: 3,
        };
        let model = CaeModel::build(&config, 31).unwrap();
        save_checkpoint(&path, &model, None).unwrap();
        let loaded = load_checkpoint(&path).unwrap();

        let probe = cae_core::Tensor::filled(vec![3, 16, 16], 0.4);
        let before = model.reconstruction_error(&probe).unwrap();
        let after = loaded.reconstruction_error(&probe).unwrap();
        // Weights are stored at 32-bit precision.
        assert!((before - after).abs() <= 1e-4 * before.max(1.0));

        // A second round trip is exact: the model is already quantized.
        save_checkpoint(&path, &loaded, None).unwrap();
        let twice = load_checkpoint(&path).unwrap();
        assert_eq!(
            twice.reconstruction_error(&probe).unwrap(),
            loaded.reconstruction_error(&probe).unwrap()
        );
    }

    #[test]
    fn corrupted_files_are_named_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.cae1");
        let config = CaeConfig {
            input_size: (3, 16, 16),
            encoder_channels: vec![2, 2, 2],
            kernel_size: 3,
        };
        let model = CaeModel::build(&config, 1).unwrap();
        save_checkpoint(&path, &model, None).unwrap();
        let good = std::fs::read(&path).unwrap();

        // Bad magic.
        let mut bad = good.clone();
        bad[0] = b'Z';
        std::fs::write(&path, &bad).unwrap();
        let err = load_checkpoint(&path).unwrap_err();
        assert!(err.to_string().contains("bad magic"), "{err}");

        // Truncation.
        std::fs::write(&path, &good[..good.len() - 9]).unwrap();
        let err = load_checkpoint(&path).unwrap_err();
        assert!(err.to_string().contains("format error"), "{err}");
    }
}
