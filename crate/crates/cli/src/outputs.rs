use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use gazeattn_core::data::io::write_atomic;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::failure::{CliResult, Failure};

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Default, Serialize)]
pub struct Manifest {
    pub files: Vec<FileEntry>,
    pub failures: Vec<String>,
    pub warnings: Vec<String>,
}

/// Writes artifacts under one directory and records them for the manifest.
pub struct Outputs {
    root: PathBuf,
    files: BTreeMap<String, FileEntry>,
    pub failures: Vec<String>,
    pub warnings: Vec<String>,
}

impl Outputs {
    pub fn new(root: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(root)
            .map_err(|e| Failure::Config(format!("cannot create output directory {}: {e}", root.display())))?;
        Ok(Self {
            root: root.to_path_buf(),
            files: BTreeMap::new(),
            failures: Vec::new(),
            warnings: Vec::new(),
        })
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> CliResult<PathBuf> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)
                .map_err(|e| Failure::Data(format!("cannot create {}: {e}", parent.display())))?;
        }
        write_atomic(&path, bytes).map_err(|e| Failure::Data(e.to_string()))?;
        self.files.insert(
            rel.to_string(),
            FileEntry {
                path: rel.to_string(),
                sha256: hex::encode(Sha256::digest(bytes)),
                bytes: bytes.len(),
            },
        );
        Ok(path)
    }

    pub fn write_json<T: Serialize + ?Sized>(&mut self, rel: &str, value: &T) -> CliResult<PathBuf> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::Internal(e.to_string()))?;
        text.push('\n');
        self.write(rel, text.as_bytes())
    }

    /// Writes `manifest.json` listing every file written so far, sorted by path.
    pub fn finish(mut self) -> CliResult<Manifest> {
        let manifest = Manifest {
            files: self.files.values().cloned().collect(),
            failures: std::mem::take(&mut self.failures),
            warnings: std::mem::take(&mut self.warnings),
        };
        let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| Failure::Internal(e.to_string()))?;
        text.push('\n');
        write_atomic(&self.root.join("manifest.json"), text.as_bytes()).map_err(|e| Failure::Data(e.to_string()))?;
        Ok(manifest)
    }
}
