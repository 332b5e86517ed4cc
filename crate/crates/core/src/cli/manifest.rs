//! Run manifest: config echo, version, timing and output checksums.

use std::io::Read;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::ConfigFile;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct OutputEntry {
    pub path: PathBuf,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub software: String,
    pub version: String,
    pub command: String,
    pub config: ConfigFile,
    /// Time step actually used, s.
    pub dt: f64,
    pub started_unix: u64,
    pub wall_clock_seconds: f64,
    pub outputs: Vec<OutputEntry>,
}

pub fn sha256_file(path: &Path) -> Result<(String, u64)> {
    let mut file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 1 << 16];
    let mut total = 0u64;
    loop {
        let n = file.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
        total += n as u64;
    }
    Ok((hex::encode(hasher.finalize()), total))
}

impl RunManifest {
    /// Checksum `files` and record them relative to `root` where possible.
    pub fn record_outputs(&mut self, root: &Path, files: &[PathBuf]) -> Result<()> {
        for f in files {
            let (sha256, bytes) = sha256_file(f)?;
            let path = f.strip_prefix(root).unwrap_or(f).to_path_buf();
            self.outputs.push(OutputEntry { path, sha256, bytes });
        }
        Ok(())
    }

    /// Write `manifest.json` in `dir` via a temporary file and a rename.
    pub fn write_atomic(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("manifest.json");
        let tmp = dir.join(".manifest.json.tmp");
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(&tmp, text + "\n").map_err(|e| Error::io(&tmp, e))?;
        std::fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}
