//! Reproducible run manifests: enough recorded state to rerun a command and
//! obtain byte-identical outputs with the same build.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::error::CliResult;
use crate::io::{atomic_write, file_digest};

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    /// Unix seconds; taken from `SOURCE_DATE_EPOCH` when set, so reruns of
    /// the same (config, seed) are bit-identical including this file.
    pub timestamp_unix_s: u64,
    /// Fully resolved configuration after defaults and flag overrides.
    pub config: serde_json::Value,
    pub inputs: Vec<InputDigest>,
}

fn timestamp() -> u64 {
    if let Ok(v) = std::env::var("SOURCE_DATE_EPOCH") {
        if let Ok(s) = v.trim().parse::<u64>() {
            return s;
        }
    }
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

impl RunManifest {
    pub fn new(command: &str, seed: u64, config: serde_json::Value) -> Self {
        Self {
            tool: "jcas",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            seed,
            timestamp_unix_s: timestamp(),
            config,
            inputs: Vec::new(),
        }
    }

    pub fn add_input(&mut self, path: &Path) -> CliResult<()> {
        self.inputs.push(InputDigest {
            path: path.display().to_string(),
            sha256: file_digest(path)?,
        });
        Ok(())
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("manifest serializes");
        bytes.push(b'\n');
        atomic_write(path, &bytes)
    }
}
