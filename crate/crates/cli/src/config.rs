//! TOML run configuration. Every section and key is optional; missing values keep the
//! built-in defaults and command-line flags override both.

use std::path::Path;

use anyhow::{Context, Result};
use qgan_core::{HybridConfig, ShowerProfile, SpsaConfig, TrainConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub full: TrainConfig,
    pub hybrid: HybridConfig,
    pub spsa: SpsaConfig,
}

fn read_toml<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn load(path: Option<&Path>) -> Result<FileConfig> {
    match path {
        Some(p) => read_toml(p),
        None => Ok(FileConfig::default()),
    }
}

pub fn load_profile(path: &Path) -> Result<ShowerProfile> {
    let profile: ShowerProfile = read_toml(path)?;
    profile
        .validate()
        .with_context(|| format!("invalid profile in {}", path.display()))?;
    Ok(profile)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_file_keeps_defaults() {
        let cfg: FileConfig = toml::from_str("[full]\nepochs = 12\n[spsa]\nc0 = 0.2\n").unwrap();
        assert_eq!(cfg.full.epochs, 12);
        assert_eq!(cfg.full.gen_lr, 0.02);
        assert_eq!(cfg.spsa.c0, 0.2);
        assert_eq!(cfg.hybrid, HybridConfig::default());
    }

    #[test]
    fn unknown_section_rejected() {
        assert!(toml::from_str::<FileConfig>("[fulll]\nepochs = 1\n").is_err());
    }

    #[test]
    fn profile_from_toml() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("profile.toml");
        std::fs::write(&path, "means = [0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1]\n").unwrap();
        let profile = load_profile(&path).unwrap();
        assert_eq!(profile.means, [0.1; 8]);
        assert_eq!(profile.stds, ShowerProfile::default().stds);
    }
}
