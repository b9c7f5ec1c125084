//! Run manifests: every file-producing run writes a small JSON record
//! beside its output so results can be traced back to their exact inputs.
//! Output files themselves are deterministic functions of (inputs, flags);
//! the timestamp lives only here.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    /// SHA-256 of the canonical effective-config JSON.
    pub config_digest: String,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub tool_version: String,
    pub created_unix: u64,
}

impl RunManifest {
    pub fn new<C: Serialize>(
        command: &str,
        effective_config: &C,
        inputs: Vec<PathBuf>,
        outputs: Vec<PathBuf>,
    ) -> Result<RunManifest> {
        let canonical =
            serde_json::to_string(effective_config).context("serializing effective config")?;
        let digest = Sha256::digest(canonical.as_bytes());
        let mut hex = String::with_capacity(64);
        for byte in digest {
            hex.push_str(&format!("{byte:02x}"));
        }
        Ok(RunManifest {
            command: command.to_string(),
            config_digest: hex,
            inputs,
            outputs,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            created_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        })
    }

    /// Writes `<output>.manifest.json` next to the named output file.
    pub fn write_beside(&self, output: &Path) -> Result<()> {
        let mut name = output.file_name().unwrap_or_default().to_os_string();
        name.push(".manifest.json");
        let path = output.with_file_name(name);
        let body = serde_json::to_string_pretty(self).context("serializing manifest")?;
        std::fs::write(&path, body + "\n")
            .with_context(|| format!("writing manifest {}", path.display()))?;
        Ok(())
    }
}
