use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::Artifacts;

/// Record written next to every set of outputs.
///
/// `config` is the resolved scenario as TOML (JSON cannot hold the infinite
/// rates of wired pairs). Running the same command on it with `seed`
/// reproduces the CSV files byte for byte.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub config_path: String,
    pub config: String,
    pub seed: u64,
    pub outputs: Vec<String>,
    pub started_at_unix_s: u64,
    pub elapsed_s: f64,
}

impl RunManifest {
    pub fn new(
        command: &str,
        config_path: &Path,
        artifacts: &Artifacts,
        outputs: &[PathBuf],
        started_at_unix_s: u64,
        elapsed_s: f64,
    ) -> Self {
        Self {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_path: config_path.display().to_string(),
            config: artifacts.config.to_toml_string(),
            seed: artifacts.seed,
            outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
            started_at_unix_s,
            elapsed_s,
        }
    }

    pub fn write(&self, path: &Path) -> anyhow::Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}
