//! Dataset assembly: manifest + composition + split -> normalized tensors.

use cae_core::raster::normalize_face;
use cae_core::{Label, Tensor};

use crate::error::{PipelineError, Result};
use crate::manifest::{Composition, Manifest, Split};

/// Loads and normalizes exactly the samples whose source tag belongs to the
/// composition and whose split matches, in manifest order.
pub fn assemble(
    manifest: &Manifest,
    composition: &Composition,
    split: Split,
    size: usize,
) -> Result<Vec<(Tensor, Label, String)>> {
    let known = manifest.sources();
    for source in &composition.sources {
        if !known.contains(source) {
            return Err(PipelineError::Assembly(format!(
                "composition {:?} names source {source:?} absent from manifest {:?} (has {known:?})",
                composition.name, manifest.name
            )));
        }
    }
    let mut out = Vec::new();
    for sample in manifest.samples() {
        if sample.split != split || !composition.sources.contains(&sample.source) {
            continue;
        }
        let raster = crate::imageio::load_raster(&sample.path)?;
        let tensor = normalize_face(&raster, size).map_err(|e| PipelineError::Decode {
            path: sample.path.clone(),
            message: e.to_string(),
        })?;
        out.push((tensor, sample.label, sample.source.clone()));
    }
    if out.is_empty() {
        return Err(PipelineError::Assembly(format!(
            "no {split} samples for composition {:?} in manifest {:?}",
            composition.name, manifest.name
        )));
    }
    Ok(out)
}

/// Client images only, as a bare tensor list (the one-class training input).
pub fn client_tensors(assembled: &[(Tensor, Label, String)]) -> Vec<Tensor> {
    assembled
        .iter()
        .filter(|(_, label, _)| *label == Label::Client)
        .map(|(t, _, _)| t.clone())
        .collect()
}

/// Drops the source tags, keeping (tensor, label) pairs for scoring.
pub fn labeled_pairs(assembled: Vec<(Tensor, Label, String)>) -> Vec<(Tensor, Label)> {
    assembled.into_iter().map(|(t, l, _)| (t, l)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifest::write_manifest;
    use cae_core::synth::{client_image, default_domain_specs};
    use std::path::PathBuf;

    fn synth_manifest(dir: &std::path::Path) -> Manifest {
        let spec = &default_domain_specs(5)[0];
        let mut rows = Vec::new();
        for (i, (split, label)) in [
            (Split::Train, Label::Client),
            (Split::Train, Label::Client),
            (Split::Val, Label::Client),
            (Split::Test, Label::Imposter),
        ]
        .iter()
        .enumerate()
        {
            let rel = PathBuf::from(format!("img_{i}.png"));
            let raster = client_image(spec, i as u64);
            crate::imageio::save_png(&dir.join(&rel), &raster).unwrap();
            rows.push((rel, *label, "baseline".to_string(), *split));
        }
        // A second source for composition filtering.
        let rel = PathBuf::from("wild_0.png");
        crate::imageio::save_png(&dir.join(&rel), &client_image(spec, 9)).unwrap();
        rows.push((rel, Label::Client, "wild".to_string(), Split::Train));

        let m = dir.join("m.csv");
        write_manifest(&m, "demo", &rows).unwrap();
        Manifest::load(&m).unwrap()
    }

    #[test]
    fn composition_filters_sources_and_splits() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = synth_manifest(dir.path());

        let d1 = assemble(&manifest, &Composition::builtin("D1").unwrap(), Split::Train, 64).unwrap();
        assert_eq!(d1.len(), 2);
        assert!(d1.iter().all(|(_, _, s)| s == "baseline"));

        let d2 = assemble(&manifest, &Composition::builtin("D2").unwrap(), Split::Train, 64).unwrap();
        assert_eq!(d2.len(), 3);
        // Nesting: D2 training data contains all of D1's.
        assert!(d2.len() > d1.len());

        let tensors = client_tensors(&d2);
        assert_eq!(tensors.len(), 3);
        assert!(tensors.iter().all(|t| t.shape() == [3, 64, 64]));
    }

    #[test]
    fn absent_source_is_an_assembly_error() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = synth_manifest(dir.path());
        let comp = Composition::custom("bad", vec!["nuaa2".to_string()]);
        let err = assemble(&manifest, &comp, Split::Train, 64).unwrap_err();
        assert!(err.to_string().contains("nuaa2"), "{err}");
    }

    #[test]
    fn empty_selection_is_an_assembly_error() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = synth_manifest(dir.path());
        // The wild source has no validation rows.
        let comp = Composition::custom("wild-only", vec!["wild".to_string()]);
        let err = assemble(&manifest, &comp, Split::Val, 64).unwrap_err();
        assert!(matches!(err, PipelineError::Assembly(_)), "{err}");
    }

    #[test]
    fn tensors_are_normalized_to_unit_range() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = synth_manifest(dir.path());
        let all = assemble(&manifest, &Composition::all(&manifest), Split::Train, 64).unwrap();
        for (t, _, _) in &all {
            assert!(t.data().iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }
}
