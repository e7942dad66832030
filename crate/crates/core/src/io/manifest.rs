use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use crate::error::{QgError, Result};

pub const MANIFEST_SCHEMA: &str = "qgsim-manifest/1";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Path relative to the output directory.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Inventory of one run's outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: String,
    pub version: String,
    pub config: BTreeMap<String, String>,
    pub seed: u64,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub files: Vec<FileEntry>,
}

pub fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl RunManifest {
    pub fn new(config: BTreeMap<String, String>, seed: u64, started_unix: f64) -> Self {
        RunManifest {
            schema: MANIFEST_SCHEMA.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config,
            seed,
            started_unix,
            finished_unix: started_unix,
            files: Vec::new(),
        }
    }

    /// Hashes `dir/rel` and adds it to the inventory.
    pub fn add_file(&mut self, dir: &Path, rel: &str) -> Result<()> {
        let path = dir.join(rel);
        let bytes = std::fs::read(&path).map_err(|e| QgError::io(&path, e))?;
        self.files.push(FileEntry {
            path: rel.to_string(),
            bytes: bytes.len() as u64,
            sha256: sha256_hex(&bytes),
        });
        Ok(())
    }

    /// Stamps the finish time and writes `dir/manifest.json`.
    pub fn finish(mut self, dir: &Path) -> Result<Self> {
        self.finished_unix = unix_now();
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(&self).map_err(|e| QgError::Schema(e.to_string()))?;
        std::fs::write(&path, text + "\n").map_err(|e| QgError::io(&path, e))?;
        Ok(self)
    }
}

/// Re-reads `dir/manifest.json` and checks size and digest of every listed file.
pub fn verify_manifest(dir: &Path) -> Result<RunManifest> {
    let path = dir.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| QgError::io(&path, e))?;
    let manifest: RunManifest = serde_json::from_str(&text).map_err(|e| QgError::Schema(format!("manifest: {e}")))?;
    if manifest.schema != MANIFEST_SCHEMA {
        return Err(QgError::Schema(format!("unsupported manifest schema `{}`", manifest.schema)));
    }
    for entry in &manifest.files {
        let p = dir.join(&entry.path);
        let bytes = std::fs::read(&p).map_err(|e| QgError::io(&p, e))?;
        if bytes.len() as u64 != entry.bytes || sha256_hex(&bytes) != entry.sha256 {
            return Err(QgError::Schema(format!("digest mismatch for {}", entry.path)));
        }
    }
    Ok(manifest)
}
