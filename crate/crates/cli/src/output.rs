//! Per-invocation output directories and their manifests.

use crate::config::Config;
use crate::error::CliError;
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

pub const MANIFEST: &str = "manifest.toml";

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub created_utc: String,
    pub workers: usize,
    /// Infeasible layouts discarded while sampling.
    pub rejections: usize,
    pub summary: BTreeMap<String, String>,
    pub config: Config,
}

impl Manifest {
    pub fn new(command: &str, seed: u64, workers: usize, config: &Config) -> Self {
        Manifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            created_utc: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            workers,
            rejections: 0,
            summary: BTreeMap::new(),
            config: config.clone(),
        }
    }
}

/// Creates `<root>/<command>-<UTC time>-s<seed>`, with a numeric suffix
/// when that name is taken.
pub fn create_run_dir(root: &Path, command: &str, seed: u64) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(root)?;
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%SZ");
    let base = format!("{command}-{stamp}-s{seed}");
    for n in 0.. {
        let name = if n == 0 { base.clone() } else { format!("{base}-{n}") };
        let dir = root.join(name);
        match std::fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(e.into()),
        }
    }
    unreachable!()
}

pub fn write_manifest(dir: &Path, m: &Manifest) -> Result<(), CliError> {
    let text = toml::to_string(m).map_err(|e| CliError::Internal(e.into()))?;
    std::fs::write(dir.join(MANIFEST), text)?;
    Ok(())
}

pub fn write_rows<T: Serialize>(path: &Path, rows: &[T], header: &[&str]) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
