use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: &'static str,
    pub config: serde_json::Value,
    /// SHA-256 over the input files in `inputs` order.
    pub data_checksum: Option<String>,
    pub inputs: Vec<PathBuf>,
    pub seed: Option<u64>,
    pub artifacts: Vec<PathBuf>,
    pub duration_secs: f64,
}

pub fn checksum(paths: &[PathBuf]) -> Result<Option<String>> {
    if paths.is_empty() {
        return Ok(None);
    }
    let mut hasher = Sha256::new();
    for p in paths {
        let bytes = std::fs::read(p).with_context(|| format!("reading {}", p.display()))?;
        hasher.update(&bytes);
    }
    Ok(Some(hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()))
}

/// Collects artifact paths as they are written and emits `manifest.json`.
pub struct OutputDir {
    root: PathBuf,
    artifacts: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(Self {
            root: root.to_path_buf(),
            artifacts: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, text: &str) -> Result<PathBuf> {
        let path = self.root.join(name);
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        self.artifacts.push(path.clone());
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        self.write(name, &(serde_json::to_string_pretty(value)? + "\n"))
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Records a file written by someone else, such as a plot backend.
    pub fn register(&mut self, path: PathBuf) {
        self.artifacts.push(path);
    }

    pub fn finish(
        self,
        command: &str,
        config: serde_json::Value,
        inputs: Vec<PathBuf>,
        seed: Option<u64>,
        elapsed: Duration,
    ) -> Result<PathBuf> {
        let manifest = RunManifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION"),
            config,
            data_checksum: checksum(&inputs)?,
            inputs,
            seed,
            artifacts: self.artifacts,
            duration_secs: elapsed.as_secs_f64(),
        };
        let path = self.root.join("manifest.json");
        std::fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}
