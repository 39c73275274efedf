//! Run manifests: a config echo, version, wall time, per-operation timings,
//! and SHA-256 digests of every result file, written atomically next to the
//! outputs. `verify` recomputes the digests so post-hoc edits are caught.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config: Vec<(String, String)>,
    pub wall_ms: u64,
    pub op_timings_ms: Vec<(String, u64)>,
    pub outputs: Vec<OutputDigest>,
}

impl RunManifest {
    pub fn new(config: Vec<(String, String)>) -> Self {
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            wall_ms: 0,
            op_timings_ms: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn record_output(&mut self, path: &Path) -> std::io::Result<()> {
        let bytes = fs::read(path)?;
        self.outputs.push(OutputDigest {
            path: path.display().to_string(),
            sha256: hex_digest(&bytes),
        });
        Ok(())
    }

    /// Recompute every output digest; returns the paths that no longer match.
    pub fn verify(&self) -> std::io::Result<Vec<String>> {
        let mut bad = Vec::new();
        for out in &self.outputs {
            let bytes = fs::read(&out.path)?;
            if hex_digest(&bytes) != out.sha256 {
                bad.push(out.path.clone());
            }
        }
        Ok(bad)
    }

    pub fn manifest_path(output: &Path) -> PathBuf {
        let mut name = output.file_name().unwrap_or_default().to_os_string();
        name.push(".manifest.json");
        output.with_file_name(name)
    }

    pub fn write_next_to(&self, output: &Path) -> std::io::Result<PathBuf> {
        let path = Self::manifest_path(output);
        let json = serde_json::to_string_pretty(self).expect("manifest serializes");
        atomic_write(&path, json.as_bytes())?;
        Ok(path)
    }
}

pub fn hex_digest(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let out = hasher.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}

/// Write via a temp file in the same directory plus rename, so readers never
/// observe a partial file.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp-write");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}
