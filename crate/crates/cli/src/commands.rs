//! `gen-data`, `infer` and `eval`.

use std::path::PathBuf;

use anyhow::{Context, Result};
use log::info;
use qgan_core::circuits::build_noise_layer;
use qgan_core::data::{load_csv, save_csv, synth_dataset_with};
use qgan_core::metrics::{average_image, mse_between, pixel_squared_errors};
use qgan_core::qgan::{generate_from_noise, Readout};
use qgan_core::{MseResult, ShowerProfile, N_PIXELS};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::artifacts::{self, ParamsFile};

#[derive(Debug, Clone, clap::Args)]
pub struct GenDataArgs {
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// TOML file with `means`, `stds`, `energy_min`, `energy_max`.
    #[arg(long)]
    pub profile_file: Option<PathBuf>,
}

pub fn gen_data(args: &GenDataArgs) -> Result<()> {
    let profile = match &args.profile_file {
        Some(p) => crate::config::load_profile(p).context("loading shower profile")?,
        None => ShowerProfile::default(),
    };
    let images = synth_dataset_with(&profile, args.n, args.seed).context("synthesising images")?;
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    save_csv(&args.out, &images)
        .with_context(|| format!("writing images to {}", args.out.display()))?;
    info!("wrote {} images to {}", images.len(), args.out.display());
    Ok(())
}

#[derive(Debug, Clone, clap::Args)]
pub struct InferArgs {
    #[arg(long)]
    pub params: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 1024)]
    pub shots: u64,
    #[arg(long)]
    pub exact: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

/// Noise and measurement use separate streams, so `--exact` and shot runs with the same
/// seed see identical noise vectors.
pub fn infer(args: &InferArgs) -> Result<()> {
    let params = ParamsFile::load(&args.params)?;
    anyhow::ensure!(args.n >= 1, "--n must be >= 1");
    anyhow::ensure!(args.exact || args.shots >= 1, "--shots must be >= 1");
    let mut noise_rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut shot_rng = ChaCha8Rng::seed_from_u64(args.seed);
    shot_rng.set_stream(1);
    let noise = (0..args.n)
        .map(|_| build_noise_layer(&params.noise_stds, &params.encoding, &mut noise_rng))
        .collect::<qgan_core::Result<Vec<_>>>()
        .context("drawing generator noise")?;
    let readout = Readout::new(args.exact, args.shots);
    let images = generate_from_noise(
        &params.gen,
        &noise,
        &params.encoding,
        readout,
        &mut shot_rng,
    )
    .context("generating images")?;
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    save_csv(&args.out, &images)
        .with_context(|| format!("writing images to {}", args.out.display()))?;
    info!(
        "wrote {} generated images to {}",
        images.len(),
        args.out.display()
    );
    Ok(())
}

#[derive(Debug, Clone, clap::Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub generated_csv: PathBuf,
    #[arg(long)]
    pub reference_csv: PathBuf,
    /// Output directory for `metrics.jsonl` and `pixels.csv`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Serialize)]
pub struct EvalReport {
    pub generated: PathBuf,
    pub reference: PathBuf,
    pub n_generated: usize,
    pub n_reference: usize,
    #[serde(flatten)]
    pub mse: MseResult,
    pub average_generated: [f64; N_PIXELS],
    pub average_reference: [f64; N_PIXELS],
}

pub fn eval(args: &EvalArgs) -> Result<EvalReport> {
    let generated = load_csv(&args.generated_csv)
        .with_context(|| format!("loading generated images {}", args.generated_csv.display()))?;
    let reference = load_csv(&args.reference_csv)
        .with_context(|| format!("loading reference images {}", args.reference_csv.display()))?;
    let mse = mse_between(&generated, &reference).context("computing MSE")?;
    let squared = pixel_squared_errors(&generated, &reference)?;
    let report = EvalReport {
        generated: args.generated_csv.clone(),
        reference: args.reference_csv.clone(),
        n_generated: generated.len(),
        n_reference: reference.len(),
        mse,
        average_generated: average_image(&generated)?,
        average_reference: average_image(&reference)?,
    };

    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    artifacts::write_jsonl(
        &args.out.join("metrics.jsonl"),
        std::slice::from_ref(&report),
    )?;
    let pixels_path = args.out.join("pixels.csv");
    let mut wtr = csv::Writer::from_writer(artifacts::create(&pixels_path)?);
    wtr.write_record(["pixel", "generated_mean", "reference_mean", "squared_error"])?;
    for (i, sq) in squared.iter().enumerate() {
        wtr.write_record(&[
            i.to_string(),
            report.average_generated[i].to_string(),
            report.average_reference[i].to_string(),
            sq.to_string(),
        ])?;
    }
    wtr.flush()
        .with_context(|| format!("writing {}", pixels_path.display()))?;
    info!("mse {:.6e} +- {:.6e} MeV^2", mse.mse, mse.std);
    Ok(report)
}
