use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use chrono::{DateTime, SecondsFormat, Utc};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    /// SHA-256 of every input that affects the numbers.
    pub config_digest: String,
    pub seed: u64,
    pub tool_version: String,
    pub started_at: String,
    pub finished_at: String,
    /// Paths relative to the output directory.
    pub outputs: Vec<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn digest_inputs(inputs: &serde_json::Value) -> String {
    sha256_hex(inputs.to_string().as_bytes())
}

fn stamp(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Millis, true)
}

pub struct Run {
    command: String,
    digest: String,
    seed: u64,
    started: DateTime<Utc>,
}

impl Run {
    pub fn start(command: &str, inputs: &serde_json::Value, seed: u64) -> Self {
        Run {
            command: command.into(),
            digest: digest_inputs(inputs),
            seed,
            started: Utc::now(),
        }
    }

    pub fn finish(self, out: &Path, outputs: &[PathBuf]) -> Result<PathBuf> {
        let rel = outputs
            .iter()
            .map(|p| p.strip_prefix(out).unwrap_or(p).display().to_string())
            .collect();
        let manifest = RunManifest {
            command: self.command,
            config_digest: self.digest,
            seed: self.seed,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            started_at: stamp(self.started),
            finished_at: stamp(Utc::now()),
            outputs: rel,
        };
        let path = out.join(MANIFEST_FILE);
        write_json(&path, &manifest)?;
        Ok(path)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}
