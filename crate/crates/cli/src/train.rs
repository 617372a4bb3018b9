//! `qgan train`: independent trials in parallel, artifacts written by the coordinator.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use log::{info, warn};
use qgan_core::data::load_csv;
use qgan_core::hybrid::train_hybrid_with;
use qgan_core::metrics::aggregate_trials;
use qgan_core::qgan::train_full_qgan_with;
use qgan_core::{
    HybridConfig, LossRecord, MlpSpec, MseResult, ShowerImage, SpsaConfig, TrainConfig,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::artifacts::{self, Model, ParamsFile};
use crate::config::FileConfig;
use crate::manifest::{FailedTrial, RunManifest};

#[derive(Debug, Clone, clap::Args)]
pub struct TrainArgs {
    #[arg(long, value_enum)]
    pub model: Model,
    #[arg(long)]
    pub train_csv: PathBuf,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    /// Exact probabilities instead of shot sampling.
    #[arg(long)]
    pub exact: bool,
    #[arg(long)]
    pub shots: Option<u64>,
    /// Base seed; trial `i` uses `seed + i`.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, env = "QGAN_OUT_DIR", default_value = "runs")]
    pub out: PathBuf,
    /// Maximum concurrent trials. Defaults to the number of cores.
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Effective settings after merging defaults, config file and flags.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ModelConfig {
    Full(TrainConfig),
    Hybrid(HybridConfig),
}

impl ModelConfig {
    fn with_seed(&self, seed: u64) -> Self {
        let mut c = self.clone();
        match &mut c {
            ModelConfig::Full(cfg) => cfg.seed = seed,
            ModelConfig::Hybrid(cfg) => cfg.seed = seed,
        }
        c
    }

    fn seed(&self) -> u64 {
        match self {
            ModelConfig::Full(cfg) => cfg.seed,
            ModelConfig::Hybrid(cfg) => cfg.seed,
        }
    }

    fn epochs(&self) -> usize {
        match self {
            ModelConfig::Full(cfg) => cfg.epochs,
            ModelConfig::Hybrid(cfg) => cfg.epochs,
        }
    }
}

pub fn resolve(args: &TrainArgs, file: &FileConfig) -> ModelConfig {
    macro_rules! apply {
        ($cfg:expr) => {{
            let mut cfg = $cfg;
            if let Some(e) = args.epochs {
                cfg.epochs = e;
            }
            if args.exact {
                cfg.exact_mode = true;
            }
            if let Some(s) = args.shots {
                cfg.shots = s;
            }
            if let Some(s) = args.seed {
                cfg.seed = s;
            }
            cfg
        }};
    }
    match args.model {
        Model::Full => ModelConfig::Full(apply!(file.full.clone())),
        _ => ModelConfig::Hybrid(apply!(file.hybrid.clone())),
    }
}

struct TrialOutput {
    params: ParamsFile,
    curve: Vec<MseResult>,
    losses: Vec<LossRecord>,
}

fn run_trial(
    model: Model,
    cfg: &ModelConfig,
    spsa: &SpsaConfig,
    data: &[ShowerImage],
    trial: usize,
) -> qgan_core::Result<TrialOutput> {
    let seed = cfg.seed();
    let epochs = cfg.epochs();
    let progress = |epoch: usize, _: &LossRecord, mse: &MseResult| {
        if (epoch + 1).is_multiple_of(50) || epoch + 1 == epochs {
            info!(
                "trial {trial}: epoch {}/{epochs}, mse {:.6}",
                epoch + 1,
                mse.mse
            );
        }
    };
    match (cfg, model.mlp_size()) {
        (ModelConfig::Full(cfg), _) => {
            let out = train_full_qgan_with(data, cfg, spsa, progress)?;
            Ok(TrialOutput {
                params: ParamsFile {
                    model,
                    seed,
                    gen: out.params.gen,
                    disc: out.params.disc,
                    mlp_widths: None,
                    noise_stds: out.stats.stds,
                    encoding: cfg.encoding,
                },
                curve: out.mse_curve,
                losses: out.losses,
            })
        }
        (ModelConfig::Hybrid(cfg), Some(size)) => {
            let out = train_hybrid_with(data, size, cfg, spsa, progress)?;
            Ok(TrialOutput {
                params: ParamsFile {
                    model,
                    seed,
                    gen: out.gen,
                    disc: out.disc_weights,
                    mlp_widths: Some(MlpSpec::for_size(size).layer_widths),
                    noise_stds: out.stats.stds,
                    encoding: cfg.encoding,
                },
                curve: out.mse_curve,
                losses: out.losses,
            })
        }
        (ModelConfig::Hybrid(_), None) => unreachable!("hybrid config resolved for the full model"),
    }
}

#[derive(Debug, Serialize)]
struct TrialRecord {
    trial: usize,
    seed: u64,
    status: &'static str,
    final_mse: Option<f64>,
    error: Option<String>,
}

pub fn run(args: &TrainArgs) -> Result<RunManifest> {
    let file = crate::config::load(args.config.as_deref()).context("loading configuration")?;
    let base = resolve(args, &file);
    anyhow::ensure!(args.trials >= 1, "--trials must be >= 1");
    let data = load_csv(&args.train_csv)
        .with_context(|| format!("loading training data from {}", args.train_csv.display()))?;
    info!(
        "{} training images from {}",
        data.len(),
        args.train_csv.display()
    );

    let seeds: Vec<u64> = (0..args.trials as u64).map(|i| base.seed() + i).collect();
    let jobs = args
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .context("building trial thread pool")?;
    let results: Vec<qgan_core::Result<TrialOutput>> = pool.install(|| {
        seeds
            .par_iter()
            .enumerate()
            .map(|(trial, &seed)| {
                run_trial(args.model, &base.with_seed(seed), &file.spsa, &data, trial)
            })
            .collect()
    });

    write_outputs(args, &base, &file.spsa, &seeds, results)
}

fn write_outputs(
    args: &TrainArgs,
    base: &ModelConfig,
    spsa: &SpsaConfig,
    seeds: &[u64],
    results: Vec<qgan_core::Result<TrialOutput>>,
) -> Result<RunManifest> {
    let out = &args.out;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut files = Vec::new();
    let mut failed = Vec::new();
    let mut records = Vec::new();
    let mut curves = Vec::new();

    for (trial, (result, &seed)) in results.into_iter().zip(seeds).enumerate() {
        match result {
            Ok(t) => {
                let dir = format!("trial_{trial:03}");
                let (params_path, params_rel) = artifacts::under(out, format!("{dir}/params.json"));
                artifacts::write_json(&params_path, &t.params)
                    .with_context(|| format!("writing parameters of trial {trial}"))?;
                let (curve_path, curve_rel) = artifacts::under(out, format!("{dir}/curve.csv"));
                artifacts::write_curve(&curve_path, &t.curve, &t.losses)
                    .with_context(|| format!("writing curve of trial {trial}"))?;
                files.extend([params_rel, curve_rel]);
                records.push(TrialRecord {
                    trial,
                    seed,
                    status: "ok",
                    final_mse: t.curve.last().map(|m| m.mse),
                    error: None,
                });
                curves.push(t.curve);
            }
            Err(e) => {
                warn!("trial {trial} (seed {seed}) aborted: {e}");
                records.push(TrialRecord {
                    trial,
                    seed,
                    status: "aborted",
                    final_mse: None,
                    error: Some(e.to_string()),
                });
                failed.push(FailedTrial {
                    trial,
                    seed,
                    error: e.to_string(),
                });
            }
        }
    }

    let (trials_path, trials_rel) = artifacts::under(out, "trials.jsonl");
    artifacts::write_jsonl(&trials_path, &records)?;
    files.push(trials_rel);

    if !curves.is_empty() {
        let stats = aggregate_trials(curves).context("aggregating trial curves")?;
        let (agg_path, agg_rel) = artifacts::under(out, "aggregate.csv");
        stats
            .write_csv(artifacts::create(&agg_path)?)
            .with_context(|| format!("writing {}", agg_path.display()))?;
        files.push(agg_rel);
        info!(
            "final mse {:.6} +- {:.6} over {} trials (best trial {})",
            stats.final_mean(),
            stats.final_std(),
            stats.curves.len(),
            stats.best_trial
        );
    }

    let manifest = RunManifest::new(
        args.model,
        base,
        spsa,
        &args.train_csv,
        seeds.to_vec(),
        out,
        files,
        failed,
    );
    manifest.write(out).context("writing run manifest")?;
    if manifest.failed.len() == seeds.len() {
        bail!("all {} trials aborted", seeds.len());
    }
    Ok(manifest)
}
