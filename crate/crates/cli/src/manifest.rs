//! Run manifest: config echo, timing, file inventory with checksums, and the
//! per-check pass/fail summary. Written atomically at run end.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

#[derive(Clone, Debug, Serialize)]
pub struct CheckEntry {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl CheckEntry {
    pub fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            pass,
            detail: detail.into(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Serialize)]
pub struct RunManifest {
    pub version: String,
    pub kind: String,
    pub config: RunConfig,
    pub seed: u64,
    pub threads: usize,
    pub started_unix_ms: u128,
    pub ended_unix_ms: u128,
    /// Stability bound of the explicitly integrated vertical coupling pair.
    pub explicit_coupling_dt_max: Option<f64>,
    pub dt_exceeds_coupling_bound: bool,
    pub files: Vec<FileEntry>,
    pub checks: Vec<CheckEntry>,
    pub all_checks_pass: bool,
}

pub fn now_unix_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

pub fn sha256_hex(path: &Path) -> std::io::Result<String> {
    let bytes = std::fs::read(path)?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

pub fn file_entry(out_dir: &Path, relative: &Path) -> std::io::Result<FileEntry> {
    let full = out_dir.join(relative);
    let bytes = std::fs::metadata(&full)?.len();
    Ok(FileEntry {
        path: relative.to_string_lossy().into_owned(),
        bytes,
        sha256: sha256_hex(&full)?,
    })
}

/// Serialize to `manifest.json` via a temp file plus rename.
pub fn write_manifest(out_dir: &Path, manifest: &RunManifest) -> std::io::Result<PathBuf> {
    let tmp = out_dir.join("manifest.json.tmp");
    let path = out_dir.join("manifest.json");
    {
        let mut f = std::fs::File::create(&tmp)?;
        let text = serde_json::to_string_pretty(manifest)
            .map_err(|e| std::io::Error::other(format!("manifest encode: {e}")))?;
        f.write_all(text.as_bytes())?;
        f.write_all(b"\n")?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, &path)?;
    Ok(path)
}
