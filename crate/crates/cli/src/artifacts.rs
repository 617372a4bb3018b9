//! On-disk formats shared by the subcommands.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use qgan_core::{EncodingSpec, LossRecord, MseResult, N_PIXELS};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    Full,
    HybridS,
    HybridM,
    HybridL,
}

impl Model {
    pub fn mlp_size(self) -> Option<qgan_core::MlpSize> {
        use qgan_core::MlpSize;
        match self {
            Model::Full => None,
            Model::HybridS => Some(MlpSize::S),
            Model::HybridM => Some(MlpSize::M),
            Model::HybridL => Some(MlpSize::L),
        }
    }
}

/// Trained parameters plus everything inference needs to rebuild the noise layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsFile {
    pub model: Model,
    pub seed: u64,
    pub gen: Vec<f64>,
    /// MERA-down angles for the full model, MLP weights for the hybrids.
    pub disc: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mlp_widths: Option<Vec<usize>>,
    /// Per-pixel training-set std used to scale the generator noise, MeV.
    pub noise_stds: [f64; N_PIXELS],
    pub encoding: EncodingSpec,
}

impl ParamsFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading parameter file {}", path.display()))?;
        let params: ParamsFile = serde_json::from_str(&text)
            .with_context(|| format!("malformed parameter file {}", path.display()))?;
        anyhow::ensure!(
            params.gen.len() == qgan_core::N_MERA_PARAMS,
            "{}: generator has {} parameters, expected {}",
            path.display(),
            params.gen.len(),
            qgan_core::N_MERA_PARAMS
        );
        anyhow::ensure!(
            params.noise_stds.iter().all(|s| s.is_finite() && *s >= 0.0),
            "{}: noise stds must be finite and >= 0",
            path.display()
        );
        Ok(params)
    }
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()
        .with_context(|| format!("writing {}", path.display()))
}

pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let mut w = create(path)?;
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        writeln!(w)?;
    }
    w.flush()
        .with_context(|| format!("writing {}", path.display()))
}

/// Columns: `epoch,mse,mse_std,gen_loss,disc_true_loss,disc_fake_loss,disc_loss`.
pub fn write_curve(path: &Path, curve: &[MseResult], losses: &[LossRecord]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(create(path)?);
    wtr.write_record([
        "epoch",
        "mse",
        "mse_std",
        "gen_loss",
        "disc_true_loss",
        "disc_fake_loss",
        "disc_loss",
    ])?;
    for (e, (m, l)) in curve.iter().zip(losses).enumerate() {
        wtr.write_record(&[
            (e + 1).to_string(),
            m.mse.to_string(),
            m.std.to_string(),
            l.gen.to_string(),
            l.disc_true.to_string(),
            l.disc_fake.to_string(),
            l.disc_total.to_string(),
        ])?;
    }
    wtr.flush()
        .with_context(|| format!("writing {}", path.display()))
}

/// `rel` resolved against `root`, plus the relative form for manifests.
pub fn under(root: &Path, rel: impl Into<PathBuf>) -> (PathBuf, String) {
    let rel = rel.into();
    (root.join(&rel), rel.to_string_lossy().into_owned())
}
