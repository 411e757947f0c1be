use std::fs;
use std::path::{Component, Path, PathBuf};

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Removes `.` and resolves `..` without touching the file system.
pub fn normalize_lexically(p: &Path) -> PathBuf {
    let mut out = PathBuf::new();
    for c in p.components() {
        match c {
            Component::CurDir => {}
            Component::ParentDir => {
                if matches!(out.components().next_back(), Some(Component::Normal(_))) {
                    out.pop();
                } else if !out.has_root() {
                    out.push("..");
                }
            }
            other => out.push(other.as_os_str()),
        }
    }
    out
}

/// Absolute, lexically normalized form of `p`.
pub fn absolute(p: &Path) -> Result<PathBuf> {
    let joined = if p.is_absolute() {
        p.to_path_buf()
    } else {
        std::env::current_dir().context("reading current directory")?.join(p)
    };
    Ok(normalize_lexically(&joined))
}

/// Runs `f` over `items` on a pool of `jobs` threads, keeping input order.
pub fn ordered_map<I, O, F>(items: &[I], jobs: usize, f: F) -> Result<Vec<O>>
where
    I: Sync,
    O: Send,
    F: Fn(&I) -> O + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .context("building worker pool")?;
    Ok(pool.install(|| items.par_iter().map(&f).collect()))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

/// Fields shared by every `manifest.json`.
#[derive(Debug, Serialize)]
pub struct Manifest<T: Serialize> {
    pub command: &'static str,
    pub version: &'static str,
    #[serde(flatten)]
    pub details: T,
    /// Output files, relative to the output directory, with their sha256.
    pub outputs: Vec<(String, String)>,
}

/// Writes `manifest.json` listing `files` (relative to `dir`) with digests.
pub fn write_manifest<T: Serialize>(dir: &Path, command: &'static str, details: T, files: &[&str]) -> Result<()> {
    let mut outputs = Vec::with_capacity(files.len());
    for name in files {
        let path = dir.join(name);
        let bytes = fs::read(&path).with_context(|| format!("reading {}", path.display()))?;
        outputs.push((name.to_string(), sha256_hex(&bytes)));
    }
    let manifest = Manifest {
        command,
        version: env!("CARGO_PKG_VERSION"),
        details,
        outputs,
    };
    write_json(&dir.join("manifest.json"), &manifest)
}
