use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{ensure, Result};
use qgan_core::SpsaConfig;
use serde::{Deserialize, Serialize};

use crate::artifacts::{self, Model};
use crate::train::ModelConfig;

pub const MANIFEST_FILE: &str = "manifest.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedTrial {
    pub trial: usize,
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildInfo {
    pub version: String,
    pub git: Option<String>,
}

impl BuildInfo {
    fn detect() -> Self {
        let git = std::process::Command::new("git")
            .args(["rev-parse", "--short", "HEAD"])
            .output()
            .ok()
            .filter(|o| o.status.success())
            .and_then(|o| String::from_utf8(o.stdout).ok())
            .map(|s| s.trim().to_owned())
            .filter(|s| !s.is_empty());
        Self {
            version: env!("CARGO_PKG_VERSION").to_owned(),
            git,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub created_unix: u64,
    pub build: BuildInfo,
    pub model: Model,
    pub config: serde_json::Value,
    pub spsa: SpsaConfig,
    pub train_csv: PathBuf,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    /// Paths relative to `out_dir`.
    pub files: Vec<String>,
    pub failed: Vec<FailedTrial>,
}

impl RunManifest {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        model: Model,
        config: &ModelConfig,
        spsa: &SpsaConfig,
        train_csv: &Path,
        seeds: Vec<u64>,
        out_dir: &Path,
        files: Vec<String>,
        failed: Vec<FailedTrial>,
    ) -> Self {
        Self {
            created_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
            build: BuildInfo::detect(),
            model,
            config: serde_json::to_value(config).unwrap_or(serde_json::Value::Null),
            spsa: *spsa,
            train_csv: train_csv.to_owned(),
            seeds,
            out_dir: out_dir.to_owned(),
            files,
            failed,
        }
    }

    pub fn write(&self, out_dir: &Path) -> Result<()> {
        for f in &self.files {
            ensure!(out_dir.join(f).is_file(), "manifest lists missing file {f}");
        }
        artifacts::write_jsonl(&out_dir.join(MANIFEST_FILE), std::slice::from_ref(self))
    }
}
