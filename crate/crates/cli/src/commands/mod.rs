//! Pipeline stages. Each writes its artifacts plus a manifest holding the
//! fully resolved config, so a run can be replayed exactly.

mod acquire;
mod evaluate;
mod phantom;
mod phase;
mod reconstruct;

pub use acquire::{cmd_acquire, AcquireSummary};
pub use evaluate::cmd_evaluate;
pub use phantom::cmd_phantom;
pub use phase::{cmd_phase_diagram, phase_config, PhaseSummary};
pub use reconstruct::cmd_reconstruct;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use nora_core::container::{self, Container};
use nora_core::NoraError;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub role: String,
    pub path: PathBuf,
    pub crc32: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub config: serde_json::Value,
    pub seeds: BTreeMap<String, u64>,
    pub files: Vec<FileEntry>,
    /// Stage-specific values, e.g. the noise level an acquisition produced.
    #[serde(default)]
    pub details: serde_json::Value,
}

impl Manifest {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        Manifest {
            command: command.into(),
            config: config.to_json(),
            seeds: BTreeMap::new(),
            files: Vec::new(),
            details: serde_json::Value::Null,
        }
    }

    pub fn path(config: &RunConfig, command: &str) -> PathBuf {
        config.out_dir.join(format!("{command}.manifest.json"))
    }

    pub fn write(&self, config: &RunConfig) -> CliResult<PathBuf> {
        let path = Manifest::path(config, &self.command);
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        write_bytes(&path, text.as_bytes())?;
        Ok(path)
    }

    /// A previously written manifest, if present.
    pub fn read(config: &RunConfig, command: &str) -> CliResult<Option<Manifest>> {
        let path = Manifest::path(config, command);
        if !path.exists() {
            return Ok(None);
        }
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        serde_json::from_str(&text)
            .map(Some)
            .map_err(|e| CliError::io(&path, format!("bad manifest: {e}")))
    }

    fn record(&mut self, role: &str, path: &Path, bytes: &[u8]) {
        self.files.push(FileEntry {
            role: role.into(),
            path: path.to_path_buf(),
            crc32: crc32fast::hash(bytes),
        });
    }
}

pub(crate) fn ensure_out_dir(config: &RunConfig) -> CliResult<()> {
    std::fs::create_dir_all(&config.out_dir).map_err(|e| CliError::io(&config.out_dir, e))
}

/// Temp-then-rename write.
pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> CliResult<()> {
    container::write_atomic(path, bytes).map_err(|e| CliError::io(path, e))
}

pub(crate) fn write_object(manifest: &mut Manifest, role: &str, path: &Path, object: &Container) -> CliResult<()> {
    let bytes = container::encode(object)?;
    write_bytes(path, &bytes)?;
    manifest.record(role, path, &bytes);
    Ok(())
}

pub(crate) fn write_text(manifest: &mut Manifest, role: &str, path: &Path, text: &str) -> CliResult<()> {
    write_bytes(path, text.as_bytes())?;
    manifest.record(role, path, text.as_bytes());
    Ok(())
}

/// Read a container; missing files and corrupt contents are I/O failures.
pub(crate) fn read_object(path: &Path) -> CliResult<Container> {
    if !path.exists() {
        return Err(CliError::io(path, "file not found"));
    }
    container::read_container(path).map_err(|e| match e {
        NoraError::Io { .. } | NoraError::Format(_) | NoraError::Checksum { .. } => CliError::io(path, e),
        other => other.into(),
    })
}

pub(crate) fn wrong_kind(path: &Path, expected: &str) -> CliError {
    CliError::io(path, format!("expected a {expected} container"))
}
