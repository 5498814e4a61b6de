//! CSV sample manifests and the nested training-set compositions.
//!
//! Manifest format: optional leading `# name: ...` / `# version: ...`
//! comment lines, a `path,label,source,split` header, then one sample per
//! row. Paths are relative to the manifest file. Train-split rows must be
//! labeled `client` (one-class training), paths must exist and be unique.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use cae_core::Label;
use serde::{Deserialize, Serialize};

use crate::error::{PipelineError, Result};

/// Dataset role of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(format!(
                "unknown split {other:?} (expected \"train\", \"val\" or \"test\")"
            )),
        }
    }
}

/// One labeled image record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    /// Path as written in the manifest, relative to the manifest file.
    pub rel_path: PathBuf,
    /// Resolved absolute path.
    pub path: PathBuf,
    pub label: Label,
    pub source: String,
    pub split: Split,
}

/// An ordered collection of samples loaded from one or more manifest files.
#[derive(Debug, Clone)]
pub struct Manifest {
    pub name: String,
    pub version: u32,
    samples: Vec<Sample>,
}

const HEADER: [&str; 4] = ["path", "label", "source", "split"];

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        Self::load_merged(std::slice::from_ref(&path.to_path_buf()))
    }

    /// Loads and concatenates several manifests, revalidating uniqueness
    /// across the union.
    pub fn load_merged(paths: &[PathBuf]) -> Result<Self> {
        if paths.is_empty() {
            return Err(PipelineError::Config("no manifest paths given".into()));
        }
        let mut samples = Vec::new();
        let mut names = Vec::new();
        let mut seen: HashMap<PathBuf, (PathBuf, u64)> = HashMap::new();
        let mut version = 1;
        for path in paths {
            let one = load_one(path, &mut seen)?;
            names.push(one.0);
            version = version.max(one.1);
            samples.extend(one.2);
        }
        Ok(Self {
            name: names.join("+"),
            version,
            samples,
        })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Source tags in order of first appearance.
    pub fn sources(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for s in &self.samples {
            if !out.contains(&s.source) {
                out.push(s.source.clone());
            }
        }
        out
    }
}

fn load_one(
    path: &Path,
    seen: &mut HashMap<PathBuf, (PathBuf, u64)>,
) -> Result<(String, u32, Vec<Sample>)> {
    let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));

    let mut name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "manifest".into());
    let mut version = 1u32;
    for line in text.lines().take_while(|l| l.starts_with('#')) {
        let meta = line.trim_start_matches('#').trim();
        if let Some(v) = meta.strip_prefix("name:") {
            name = v.trim().to_string();
        } else if let Some(v) = meta.strip_prefix("version:") {
            version = v.trim().parse().map_err(|_| PipelineError::Manifest {
                path: path.to_path_buf(),
                line: 1,
                message: format!("invalid version {:?}", v.trim()),
            })?;
        }
    }

    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let fail = |line: u64, message: String| PipelineError::Manifest {
        path: path.to_path_buf(),
        line,
        message,
    };

    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != HEADER {
        return Err(fail(
            1,
            format!("header must be \"path,label,source,split\", got {headers:?}"),
        ));
    }

    let mut samples = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != 4 {
            return Err(fail(line, format!("expected 4 fields, got {}", record.len())));
        }
        let rel = record.get(0).unwrap_or_default();
        if rel.is_empty() {
            return Err(fail(line, "empty path".into()));
        }
        let label: Label = record[1]
            .parse()
            .map_err(|e: cae_core::Error| fail(line, e.to_string()))?;
        let source = record[2].to_string();
        if source.is_empty() {
            return Err(fail(line, "empty source tag".into()));
        }
        let split: Split = record[3].parse().map_err(|e: String| fail(line, e))?;
        if split == Split::Train && label == Label::Imposter {
            return Err(fail(
                line,
                format!("one-class violation: train-split sample {rel:?} is labeled imposter"),
            ));
        }
        let resolved = base.join(rel);
        if !resolved.is_file() {
            return Err(fail(line, format!("referenced file {resolved:?} does not exist")));
        }
        let canonical = resolved
            .canonicalize()
            .map_err(|e| PipelineError::io(&resolved, e))?;
        if let Some((first_manifest, first_line)) = seen.get(&canonical) {
            return Err(fail(
                line,
                format!(
                    "duplicate path {rel:?} (first listed in {} line {first_line})",
                    first_manifest.display()
                ),
            ));
        }
        seen.insert(canonical, (path.to_path_buf(), line));
        samples.push(Sample {
            rel_path: PathBuf::from(rel),
            path: resolved,
            label,
            source,
            split,
        });
    }
    Ok((name, version, samples))
}

/// Writes a manifest with metadata comments and the standard header. Rows
/// are `(relative path, label, source, split)`.
pub fn write_manifest(
    path: &Path,
    name: &str,
    rows: &[(PathBuf, Label, String, Split)],
) -> Result<()> {
    let mut text = format!("# name: {name}\n# version: 1\n");
    {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer
            .write_record(HEADER)
            .and_then(|_| {
                for (rel, label, source, split) in rows {
                    writer.write_record([
                        rel.to_string_lossy().as_ref(),
                        label.as_str(),
                        source.as_str(),
                        split.as_str(),
                    ])?;
                }
                Ok(())
            })
            .map_err(PipelineError::Csv)?;
        let body = writer.into_inner().expect("vec writer never fails");
        text.push_str(&String::from_utf8(body).expect("csv output is utf-8"));
    }
    std::fs::write(path, text).map_err(|e| PipelineError::io(path, e))
}

/// A named, ordered set of source tags selecting training data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Composition {
    pub name: String,
    pub sources: Vec<String>,
}

impl Composition {
    /// The built-in nested compositions: D1 ⊂ D2 ⊂ D3.
    pub fn builtin(name: &str) -> Option<Self> {
        let sources: Vec<&str> = match name {
            "D1" => vec!["baseline"],
            "D2" => vec!["baseline", "wild"],
            "D3" => vec!["baseline", "wild", "auxdb"],
            _ => return None,
        };
        Some(Self {
            name: name.to_string(),
            sources: sources.into_iter().map(String::from).collect(),
        })
    }

    pub fn custom(name: impl Into<String>, sources: Vec<String>) -> Self {
        Self {
            name: name.into(),
            sources,
        }
    }

    /// Every source a manifest mentions, for whole-manifest selections.
    pub fn all(manifest: &Manifest) -> Self {
        Self {
            name: "all".into(),
            sources: manifest.sources(),
        }
    }
}
