//! Hybrid qGAN: the MERA-up quantum generator against a classical fully-connected
//! discriminator.
//!
//! Generated images are decoded to pixel energies before they reach the MLP, exactly like
//! true images. Inputs are rescaled to `[0, 1]` by the encoding range. The generator is
//! still trained with SPSA because it sits behind measurement; the MLP uses backpropagation
//! with moment-based adaptation.

mod mlp;

use std::cell::RefCell;

use serde::{Deserialize, Serialize};

use crate::circuits::{build_mera_up, build_noise_layer, NoiseVector, N_MERA_PARAMS};
use crate::codec::EncodingSpec;
use crate::data::{compute_stats, DatasetStats, ShowerImage, N_PIXELS};
use crate::error::{Error, Result};
use crate::metrics::{mse_between, MseResult};
use crate::qgan::train::{check_failure, guarded, reference_sample, BatchSampler, TrialRngs};
use crate::qgan::{
    bce_loss, decay_lr, decode_generator, generate_images, mera_gates, spsa_step, LossRecord,
    Readout, SpsaConfig,
};

pub use mlp::{mlp_backward, mlp_forward, Adam, MlpSize, MlpSpec, LEAKY_SLOPE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HybridConfig {
    pub gen_lr: f64,
    pub disc_lr: f64,
    pub joint_decay: f64,
    pub epochs: usize,
    pub steps_per_epoch: usize,
    pub batch_size: usize,
    pub shots: u64,
    pub label_true: f64,
    pub label_fake: f64,
    pub exact_mode: bool,
    pub seed: u64,
    pub mse_sample: usize,
    pub encoding: EncodingSpec,
}

impl Default for HybridConfig {
    fn default() -> Self {
        Self {
            gen_lr: 0.01,
            disc_lr: 0.006,
            joint_decay: 0.006,
            epochs: 1000,
            steps_per_epoch: 1,
            batch_size: 8,
            shots: 1024,
            label_true: 0.9,
            label_fake: 0.1,
            exact_mode: false,
            seed: 0,
            mse_sample: 50,
            encoding: EncodingSpec::default(),
        }
    }
}

impl HybridConfig {
    pub fn validate(&self) -> Result<()> {
        if [self.gen_lr, self.disc_lr, self.joint_decay]
            .iter()
            .any(|r| !(*r > 0.0))
        {
            return Err(Error::InvalidValue("hybrid rates must be > 0".into()));
        }
        for label in [self.label_true, self.label_fake] {
            if !(label > 0.0 && label < 1.0) {
                return Err(Error::InvalidValue(format!("label {label} outside (0, 1)")));
            }
        }
        if self.batch_size == 0 || self.steps_per_epoch == 0 || self.mse_sample == 0 {
            return Err(Error::InvalidValue(
                "batch_size, steps_per_epoch and mse_sample must be >= 1".into(),
            ));
        }
        if !self.exact_mode && self.shots == 0 {
            return Err(Error::ZeroShots);
        }
        Ok(())
    }

    pub fn readout(&self) -> Readout {
        Readout::new(self.exact_mode, self.shots)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridOutcome {
    pub size: MlpSize,
    pub gen: Vec<f64>,
    pub disc_weights: Vec<f64>,
    pub losses: Vec<LossRecord>,
    pub mse_curve: Vec<MseResult>,
    pub stats: DatasetStats,
    pub disc_updates: usize,
    pub gen_updates: usize,
}

fn mlp_input(image: &ShowerImage, spec: &EncodingSpec) -> [f64; N_PIXELS] {
    image.pixels.map(|e| (e - spec.e_min) / spec.span())
}

/// Mean BCE over `images` and its weight gradient.
fn disc_loss_and_grad(
    spec: &MlpSpec,
    weights: &[f64],
    images: &[ShowerImage],
    label: f64,
    encoding: &EncodingSpec,
) -> Result<(f64, Vec<f64>)> {
    let mut grad = vec![0.0; weights.len()];
    let mut loss = 0.0;
    for image in images {
        let x = mlp_input(image, encoding);
        loss += bce_loss(mlp_forward(spec, weights, &x)?, label);
        for (g, d) in grad.iter_mut().zip(mlp_backward(spec, weights, &x, label)?) {
            *g += d;
        }
    }
    let n = images.len() as f64;
    grad.iter_mut().for_each(|g| *g /= n);
    Ok((loss / n, grad))
}

pub fn train_hybrid(
    train_set: &[ShowerImage],
    size: MlpSize,
    cfg: &HybridConfig,
    spsa: &SpsaConfig,
) -> Result<HybridOutcome> {
    train_hybrid_with(train_set, size, cfg, spsa, |_, _, _| {})
}

pub fn train_hybrid_with<F>(
    train_set: &[ShowerImage],
    size: MlpSize,
    cfg: &HybridConfig,
    spsa: &SpsaConfig,
    mut on_epoch: F,
) -> Result<HybridOutcome>
where
    F: FnMut(usize, &LossRecord, &MseResult),
{
    cfg.validate()?;
    spsa.validate()?;
    if train_set.is_empty() {
        return Err(Error::Empty("training set"));
    }
    let stats = compute_stats(train_set)?;
    let readout = cfg.readout();
    let mlp = MlpSpec::for_size(size);
    let gen_template = build_mera_up();

    let mut rngs = TrialRngs::new(cfg.seed);
    let reference = reference_sample(train_set, cfg.mse_sample, &mut rngs.data);
    let mut sampler = BatchSampler::new(train_set.len());

    let mut gen = vec![0.0; N_MERA_PARAMS];
    let mut weights = mlp.init_weights(&mut rngs.data);
    let mut adam = Adam::new(weights.len());
    let mut losses = Vec::with_capacity(cfg.epochs);
    let mut mse_curve = Vec::with_capacity(cfg.epochs);
    let (mut disc_updates, mut gen_updates) = (0usize, 0usize);

    let draw_noise = |rng: &mut rand_chacha::ChaCha8Rng| -> Result<Vec<NoiseVector>> {
        (0..cfg.batch_size)
            .map(|_| build_noise_layer(&stats.stds, &cfg.encoding, rng))
            .collect()
    };

    for epoch in 0..cfg.epochs {
        let gen_lr = decay_lr(cfg.gen_lr, cfg.joint_decay, epoch);
        let disc_lr = decay_lr(cfg.disc_lr, cfg.joint_decay, epoch);
        sampler.start_epoch(&mut rngs.data);
        let mut acc = LossRecord::default();
        let mut gen_samples = 0usize;

        for _ in 0..cfg.steps_per_epoch {
            let batch: Vec<ShowerImage> = sampler
                .next_batch(cfg.batch_size, &mut rngs.data)
                .into_iter()
                .map(|i| train_set[i])
                .collect();
            let noise = draw_noise(&mut rngs.data)?;
            let gen_gates = mera_gates(&gen_template, &gen)?;
            let fakes = noise
                .iter()
                .map(|n| decode_generator(&gen_gates, n, &cfg.encoding, readout, &mut rngs.shots))
                .collect::<Result<Vec<_>>>()?;
            let (true_loss, true_grad) =
                disc_loss_and_grad(&mlp, &weights, &batch, cfg.label_true, &cfg.encoding)?;
            let (fake_loss, fake_grad) =
                disc_loss_and_grad(&mlp, &weights, &fakes, cfg.label_fake, &cfg.encoding)?;
            if !(true_loss + fake_loss).is_finite() {
                return Err(Error::NonFiniteLoss {
                    iteration: disc_updates,
                    context: "hybrid discriminator loss",
                });
            }
            let grad: Vec<f64> = true_grad
                .iter()
                .zip(&fake_grad)
                .map(|(a, b)| a + b)
                .collect();
            adam.step(&mut weights, &grad, disc_lr);
            disc_updates += 1;
            acc.disc_true += true_loss;
            acc.disc_fake += fake_loss;

            let noise = draw_noise(&mut rngs.data)?;
            let recorded = RefCell::new(Vec::with_capacity(2));
            let shots = RefCell::new(&mut rngs.shots);
            let mut failure = None;
            let objective = guarded(&mut failure, |candidate: &[f64]| {
                let gates = mera_gates(&gen_template, candidate)?;
                let mut rng = shots.borrow_mut();
                let mut total = 0.0;
                for n in &noise {
                    let image = decode_generator(&gates, n, &cfg.encoding, readout, &mut **rng)?;
                    let d = mlp_forward(&mlp, &weights, &mlp_input(&image, &cfg.encoding))?;
                    total += bce_loss(d, cfg.label_true);
                }
                let loss = total / noise.len() as f64;
                recorded.borrow_mut().push(loss);
                Ok(loss)
            });
            let stepped = spsa_step(objective, &gen, gen_lr, spsa, gen_updates, &mut rngs.spsa);
            check_failure(failure)?;
            gen = stepped?;
            gen_updates += 1;
            for loss in recorded.into_inner() {
                acc.gen += loss;
                gen_samples += 1;
            }
        }

        let steps = cfg.steps_per_epoch as f64;
        acc.disc_true /= steps;
        acc.disc_fake /= steps;
        acc.disc_total = acc.disc_true + acc.disc_fake;
        acc.gen /= gen_samples.max(1) as f64;

        let generated = generate_images(
            &gen,
            reference.len(),
            &stats,
            &cfg.encoding,
            readout,
            &mut rngs.data,
        )?;
        let mse = mse_between(&generated, &reference)?;
        on_epoch(epoch, &acc, &mse);
        losses.push(acc);
        mse_curve.push(mse);
    }

    Ok(HybridOutcome {
        size,
        gen,
        disc_weights: weights,
        losses,
        mse_curve,
        stats,
        disc_updates,
        gen_updates,
    })
}

/// Discriminator probability for one decoded image.
pub fn classify(
    spec: &MlpSpec,
    weights: &[f64],
    image: &ShowerImage,
    encoding: &EncodingSpec,
) -> Result<f64> {
    mlp_forward(spec, weights, &mlp_input(image, encoding))
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};

    use super::*;
    use crate::data::synth_dataset;

    fn cfg(epochs: usize) -> HybridConfig {
        HybridConfig {
            epochs,
            exact_mode: true,
            seed: 5,
            ..HybridConfig::default()
        }
    }

    #[test]
    fn defaults_match_protocol() {
        let c = HybridConfig::default();
        assert_eq!((c.gen_lr, c.disc_lr, c.joint_decay), (0.01, 0.006, 0.006));
        assert_eq!((c.epochs, c.steps_per_epoch), (1000, 1));
    }

    #[test]
    fn single_epoch_is_one_update_each() {
        let data = synth_dataset(100, 3).unwrap();
        let out = train_hybrid(&data, MlpSize::S, &cfg(1), &SpsaConfig::default()).unwrap();
        assert_eq!((out.disc_updates, out.gen_updates), (1, 1));
        assert_eq!(out.mse_curve.len(), 1);
        assert_eq!(out.disc_weights.len(), 153);
    }

    #[test]
    fn reproducible_per_seed() {
        let data = synth_dataset(100, 3).unwrap();
        let a = train_hybrid(&data, MlpSize::M, &cfg(4), &SpsaConfig::default()).unwrap();
        let b = train_hybrid(&data, MlpSize::M, &cfg(4), &SpsaConfig::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn discriminator_batch_gradient_matches_finite_difference() {
        let data = synth_dataset(8, 1).unwrap();
        let spec = MlpSpec::for_size(MlpSize::S);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let w: Vec<f64> = (0..153).map(|_| rng.random_range(-1.0..1.0)).collect();
        let enc = EncodingSpec::default();
        let (_, g) = disc_loss_and_grad(&spec, &w, &data, 0.9, &enc).unwrap();
        let h = 1e-5;
        for j in [0, 77, 152] {
            let (mut wp, mut wm) = (w.clone(), w.clone());
            wp[j] += h;
            wm[j] -= h;
            let fd = (disc_loss_and_grad(&spec, &wp, &data, 0.9, &enc).unwrap().0
                - disc_loss_and_grad(&spec, &wm, &data, 0.9, &enc).unwrap().0)
                / (2.0 * h);
            assert!((fd - g[j]).abs() < 1e-7);
        }
    }
}
