//! File formats, dataset pipeline, and experiment drivers around
//! [`cae_core`]: CSV manifests with the D1/D2/D3 composition protocol,
//! PNG/PPM image loading, deterministic synthetic-domain generation,
//! checkpoint files, score/ROC reports, and the `cae` command-line tool.

pub mod checkpoint_io;
pub mod dataset;
mod error;
pub mod experiment;
pub mod imageio;
pub mod manifest;
pub mod report;
pub mod synthio;

pub use error::{PipelineError, Result};
pub use manifest::{Composition, Manifest, Sample, Split};
