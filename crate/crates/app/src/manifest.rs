use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::AppResult;

/// Record of one CLI invocation written beside its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub wall_time_seconds: f64,
    /// SHA-256 of every written file, keyed by path.
    pub artifacts: BTreeMap<String, String>,
}

pub fn sha256_file(path: &Path) -> AppResult<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

/// Hashes a file, or every regular file directly inside a directory.
pub fn hash_artifacts(path: &Path) -> AppResult<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    if path.is_dir() {
        let mut entries: Vec<PathBuf> = fs::read_dir(path)?
            .map(|e| e.map(|e| e.path()))
            .collect::<Result<_, _>>()?;
        entries.sort();
        for p in entries.into_iter().filter(|p| p.is_file()) {
            out.insert(p.display().to_string(), sha256_file(&p)?);
        }
    } else {
        out.insert(path.display().to_string(), sha256_file(path)?);
    }
    Ok(out)
}

/// `<path>.manifest.json`, next to a file or directory output.
pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    output.with_file_name(name)
}

impl RunManifest {
    pub fn write(&self, path: &Path) -> AppResult<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }
}
