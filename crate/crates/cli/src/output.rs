use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliResult;

pub const VERSION: &str = concat!("v", env!("CARGO_PKG_VERSION"));

/// Everything needed to reproduce an output file.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    pub config_hash: String,
}

impl Provenance {
    /// Hashes the effective config together with command-specific arguments.
    pub fn new<A: Serialize>(command: &str, config: &RunConfig, args: &A, seed: u64) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(command.as_bytes());
        hasher.update(serde_json::to_vec(config).expect("config serializes"));
        hasher.update(serde_json::to_vec(args).expect("arguments serialize"));
        let digest = hasher.finalize();
        let config_hash = digest.iter().take(6).map(|b| format!("{b:02x}")).collect();
        Self {
            tool: "distshap",
            version: VERSION,
            command: command.to_string(),
            seed,
            config_hash,
        }
    }

    /// `<dir>/<command>-<hash>-seed<seed><suffix>`.
    pub fn path(&self, dir: &Path, suffix: &str) -> PathBuf {
        dir.join(format!(
            "{}-{}-seed{}{suffix}",
            self.command, self.config_hash, self.seed
        ))
    }
}

/// JSON sidecar: provenance, the effective config and a command summary.
#[derive(Serialize)]
struct Sidecar<'a, S: Serialize> {
    provenance: &'a Provenance,
    config: &'a RunConfig,
    summary: &'a S,
}

pub fn write_json<S: Serialize>(
    path: &Path,
    provenance: &Provenance,
    config: &RunConfig,
    summary: &S,
) -> CliResult<()> {
    let sidecar = Sidecar {
        provenance,
        config,
        summary,
    };
    let mut text = serde_json::to_string_pretty(&sidecar).expect("summary serializes");
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Writes through `f` into a buffer, then to `path` in one step.
pub fn write_with(path: &Path, f: impl FnOnce(&mut Vec<u8>) -> distshap::Result<()>) -> CliResult<()> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    std::fs::write(path, buf)?;
    Ok(())
}
