//! Run manifests: the resolved parameters of an artifact-producing command
//! plus SHA-256 digests of its inputs and outputs, enough to re-run the
//! command and check for bit-exact agreement.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed manifest: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub command: String,
    /// The command's resolved parameter struct, serialized.
    pub params: serde_json::Value,
    /// Input path -> SHA-256 hex digest at run time.
    pub inputs: BTreeMap<String, String>,
    /// Output path -> SHA-256 hex digest after the run.
    pub outputs: BTreeMap<String, String>,
}

impl Manifest {
    pub fn new(command: &str, params: serde_json::Value) -> Self {
        Manifest {
            version: MANIFEST_VERSION,
            command: command.to_string(),
            params,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        }
    }

    pub fn record_input(&mut self, path: &Path) -> Result<(), ManifestError> {
        self.inputs.insert(path.display().to_string(), sha256_file(path)?);
        Ok(())
    }

    /// Record an output under its logical path, hashing the file actually
    /// written (these differ when a replay is sandboxed).
    pub fn record_output(&mut self, logical: &Path, actual: &Path) -> Result<(), ManifestError> {
        self.outputs.insert(logical.display().to_string(), sha256_file(actual)?);
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), ManifestError> {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        fs::write(path, text).map_err(|e| ManifestError::Io {
            path: path.to_path_buf(),
            source: e,
        })
    }

    pub fn load(path: &Path) -> Result<Self, ManifestError> {
        let text = fs::read_to_string(path).map_err(|e| ManifestError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let manifest: Manifest =
            serde_json::from_str(&text).map_err(|e| ManifestError::Malformed(e.to_string()))?;
        if manifest.version != MANIFEST_VERSION {
            return Err(ManifestError::Malformed(format!(
                "unsupported manifest version {}",
                manifest.version
            )));
        }
        Ok(manifest)
    }

    /// Check that every recorded input still has its recorded digest.
    pub fn verify_inputs(&self) -> Result<(), String> {
        for (path, expected) in &self.inputs {
            match sha256_file(Path::new(path)) {
                Ok(actual) if &actual == expected => {}
                Ok(actual) => {
                    return Err(format!(
                        "input {path} changed since the run: {actual} != {expected}"
                    ))
                }
                Err(e) => return Err(format!("input {path} unreadable: {e}")),
            }
        }
        Ok(())
    }
}

pub fn sha256_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String, ManifestError> {
    let bytes = fs::read(path).map_err(|e| ManifestError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(sha256_bytes(&bytes))
}
