//! Artifact files and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::spec::RunSpec;

pub const MANIFEST: &str = "manifest.json";
pub const TIMINGS: &str = "timings.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantResult {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub spec: RunSpec,
    pub derived: serde_json::Value,
    pub artifacts: Vec<ArtifactEntry>,
    pub invariants: Vec<InvariantResult>,
}

impl RunManifest {
    pub fn pass(&self) -> bool {
        self.invariants.iter().all(|i| i.pass)
    }
}

pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Single writer for one output directory.
pub struct ArtifactWriter {
    dir: PathBuf,
    entries: Vec<ArtifactEntry>,
    timings: Vec<(String, f64)>,
}

impl ArtifactWriter {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(ArtifactWriter {
            dir: dir.to_path_buf(),
            entries: Vec::new(),
            timings: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.entries.push(ArtifactEntry {
            name: name.to_string(),
            bytes: bytes.len() as u64,
            sha256: digest(bytes),
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_vec_pretty(value)?;
        text.push(b'\n');
        self.write(name, &text)
    }

    pub fn time(&mut self, stage: &str, seconds: f64) {
        self.timings.push((stage.to_string(), seconds));
    }

    /// Writes the manifest and the (undigested) timings file.
    pub fn finish(
        self,
        spec: &RunSpec,
        derived: serde_json::Value,
        invariants: Vec<InvariantResult>,
    ) -> Result<RunManifest> {
        let manifest = RunManifest {
            version: env!("CARGO_PKG_VERSION").to_string(),
            spec: spec.clone(),
            derived,
            artifacts: self.entries,
            invariants,
        };
        let mut text = serde_json::to_vec_pretty(&manifest)?;
        text.push(b'\n');
        fs::write(self.dir.join(MANIFEST), text)?;
        let timings: serde_json::Map<String, serde_json::Value> = self
            .timings
            .into_iter()
            .map(|(k, v)| (k, serde_json::json!(v)))
            .collect();
        fs::write(self.dir.join(TIMINGS), serde_json::to_vec_pretty(&timings)?)?;
        Ok(manifest)
    }
}

/// `{:.16e}`: 17 significant digits, enough to round-trip an `f64`.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}
