use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    bce_loss, decay_lr, disc_template, encoded_state, generate_images, generator_state, mera_gates,
    score_state, spsa_step, GanParams, Readout, SpsaConfig, TrainConfig,
};
use crate::circuits::{build_mera_up, build_noise_layer, CircuitSpec, NoiseVector};
use crate::data::{compute_stats, DatasetStats, ShowerImage};
use crate::error::{Error, Result};
use crate::metrics::{mse_between, MseResult};
use crate::qsim::StateVector;

/// Epoch-averaged losses. Each SPSA step contributes the mean of its two evaluations.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossRecord {
    pub gen: f64,
    pub disc_true: f64,
    pub disc_fake: f64,
    pub disc_total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub params: GanParams,
    pub losses: Vec<LossRecord>,
    pub mse_curve: Vec<MseResult>,
    pub stats: DatasetStats,
    pub loss_evaluations: usize,
    pub disc_updates: usize,
    pub gen_updates: usize,
}

/// Draws batches without replacement, refilling from a fresh shuffle when exhausted and at
/// the start of every epoch.
#[derive(Debug, Clone)]
pub(crate) struct BatchSampler {
    order: Vec<usize>,
    cursor: usize,
}

impl BatchSampler {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            order: (0..n).collect(),
            cursor: n,
        }
    }

    pub(crate) fn start_epoch<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        self.order.shuffle(rng);
        self.cursor = 0;
    }

    pub(crate) fn next_batch<R: Rng + ?Sized>(&mut self, size: usize, rng: &mut R) -> Vec<usize> {
        let mut out = Vec::with_capacity(size);
        while out.len() < size {
            if self.cursor == self.order.len() {
                self.start_epoch(rng);
            }
            out.push(self.order[self.cursor]);
            self.cursor += 1;
        }
        out
    }
}

/// Independent RNG streams for one trial: data and noise, SPSA perturbations, shot sampling.
pub(crate) struct TrialRngs {
    pub(crate) data: ChaCha8Rng,
    pub(crate) spsa: ChaCha8Rng,
    pub(crate) shots: ChaCha8Rng,
}

impl TrialRngs {
    pub(crate) fn new(seed: u64) -> Self {
        let stream = |s| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s);
            rng
        };
        Self {
            data: stream(0),
            spsa: stream(1),
            shots: stream(2),
        }
    }
}

/// 50 (or fewer) training images fixed for the whole trial.
pub(crate) fn reference_sample<R: Rng + ?Sized>(
    train_set: &[ShowerImage],
    size: usize,
    rng: &mut R,
) -> Vec<ShowerImage> {
    let size = size.min(train_set.len());
    index::sample(rng, train_set.len(), size)
        .into_iter()
        .map(|i| train_set[i])
        .collect()
}

/// Runs `f` as an SPSA objective, turning the first internal error into a NaN loss and
/// surfacing it after the step.
pub(crate) fn guarded<'a, F>(failure: &'a mut Option<Error>, f: F) -> impl FnMut(&[f64]) -> f64 + 'a
where
    F: Fn(&[f64]) -> Result<f64> + 'a,
{
    move |p| match f(p) {
        Ok(v) => v,
        Err(e) => {
            failure.get_or_insert(e);
            f64::NAN
        }
    }
}

pub(crate) fn check_failure(failure: Option<Error>) -> Result<()> {
    match failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

struct Players {
    gen_template: CircuitSpec,
    disc_template: CircuitSpec,
}

pub fn train_full_qgan(
    train_set: &[ShowerImage],
    cfg: &TrainConfig,
    spsa: &SpsaConfig,
) -> Result<TrainOutcome> {
    train_full_qgan_with(train_set, cfg, spsa, |_, _, _| {})
}

/// As [`train_full_qgan`], calling `on_epoch(epoch, losses, mse)` after every epoch.
pub fn train_full_qgan_with<F>(
    train_set: &[ShowerImage],
    cfg: &TrainConfig,
    spsa: &SpsaConfig,
    mut on_epoch: F,
) -> Result<TrainOutcome>
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
    let players = Players {
        gen_template: build_mera_up(),
        disc_template: disc_template(),
    };

    let mut rngs = TrialRngs::new(cfg.seed);
    let reference = reference_sample(train_set, cfg.mse_sample, &mut rngs.data);
    let mut sampler = BatchSampler::new(train_set.len());

    let mut params = GanParams::zeros();
    let mut losses = Vec::with_capacity(cfg.epochs);
    let mut mse_curve = Vec::with_capacity(cfg.epochs);
    let (mut disc_updates, mut gen_updates, mut evaluations) = (0usize, 0usize, 0usize);

    for epoch in 0..cfg.epochs {
        let gen_lr = decay_lr(cfg.gen_lr, cfg.gen_decay, epoch);
        let disc_lr = decay_lr(cfg.disc_lr, cfg.disc_decay, epoch);
        sampler.start_epoch(&mut rngs.data);
        let mut acc = LossRecord::default();
        let (mut disc_samples, mut gen_samples) = (0usize, 0usize);

        for _ in 0..cfg.steps_per_epoch {
            for _ in 0..cfg.disc_steps_per_gen_step {
                let batch = sampler.next_batch(cfg.batch_size, &mut rngs.data);
                let noise = draw_noise(cfg, &stats, &mut rngs.data)?;
                let gen_gates = mera_gates(&players.gen_template, &params.gen)?;
                let true_states = batch
                    .iter()
                    .map(|&i| encoded_state(&train_set[i], &cfg.encoding))
                    .collect::<Result<Vec<_>>>()?;
                let fake_states = noise
                    .iter()
                    .map(|n| generator_state(n, &gen_gates))
                    .collect::<Result<Vec<_>>>()?;

                let terms = std::cell::RefCell::new(Vec::with_capacity(2));
                let shots = std::cell::RefCell::new(&mut rngs.shots);
                let mut failure = None;
                let objective = guarded(&mut failure, |disc: &[f64]| {
                    let disc_gates = mera_gates(&players.disc_template, disc)?;
                    let mut rng = shots.borrow_mut();
                    let (t, f) = disc_terms(
                        &true_states,
                        &fake_states,
                        &disc_gates,
                        cfg,
                        readout,
                        &mut **rng,
                    )?;
                    terms.borrow_mut().push((t, f));
                    Ok(t + f)
                });
                let stepped = spsa_step(
                    objective,
                    &params.disc,
                    disc_lr,
                    spsa,
                    disc_updates,
                    &mut rngs.spsa,
                );
                check_failure(failure)?;
                params.disc = stepped?;
                disc_updates += 1;
                evaluations += 2;
                for (t, f) in terms.into_inner() {
                    acc.disc_true += t;
                    acc.disc_fake += f;
                    disc_samples += 1;
                }
            }

            let noise = draw_noise(cfg, &stats, &mut rngs.data)?;
            let disc_gates = mera_gates(&players.disc_template, &params.disc)?;
            let recorded = std::cell::RefCell::new(Vec::with_capacity(2));
            let shots = std::cell::RefCell::new(&mut rngs.shots);
            let mut failure = None;
            let objective = guarded(&mut failure, |gen: &[f64]| {
                let gen_gates = mera_gates(&players.gen_template, gen)?;
                let mut rng = shots.borrow_mut();
                let mut total = 0.0;
                for n in &noise {
                    let state = generator_state(n, &gen_gates)?;
                    let d = score_state(&state, &disc_gates, readout, &mut **rng)?;
                    total += bce_loss(d, cfg.label_true);
                }
                let loss = total / noise.len() as f64;
                recorded.borrow_mut().push(loss);
                Ok(loss)
            });
            let stepped = spsa_step(
                objective,
                &params.gen,
                gen_lr,
                spsa,
                gen_updates,
                &mut rngs.spsa,
            );
            check_failure(failure)?;
            params.gen = stepped?;
            gen_updates += 1;
            evaluations += 2;
            for loss in recorded.into_inner() {
                acc.gen += loss;
                gen_samples += 1;
            }
        }

        acc.disc_true /= disc_samples.max(1) as f64;
        acc.disc_fake /= disc_samples.max(1) as f64;
        acc.disc_total = acc.disc_true + acc.disc_fake;
        acc.gen /= gen_samples.max(1) as f64;

        let generated = generate_images(
            &params.gen,
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

    Ok(TrainOutcome {
        params,
        losses,
        mse_curve,
        stats,
        loss_evaluations: evaluations,
        disc_updates,
        gen_updates,
    })
}

fn draw_noise(
    cfg: &TrainConfig,
    stats: &DatasetStats,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<NoiseVector>> {
    (0..cfg.batch_size)
        .map(|_| build_noise_layer(&stats.stds, &cfg.encoding, rng))
        .collect()
}

fn disc_terms<R: Rng + ?Sized>(
    true_states: &[StateVector],
    fake_states: &[StateVector],
    disc_gates: &[crate::qsim::Gate],
    cfg: &TrainConfig,
    readout: Readout,
    rng: &mut R,
) -> Result<(f64, f64)> {
    let mut true_term = 0.0;
    for s in true_states {
        true_term += bce_loss(score_state(s, disc_gates, readout, rng)?, cfg.label_true);
    }
    let mut fake_term = 0.0;
    for s in fake_states {
        fake_term += bce_loss(score_state(s, disc_gates, readout, rng)?, cfg.label_fake);
    }
    Ok((
        true_term / true_states.len() as f64,
        fake_term / fake_states.len() as f64,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synth_dataset;
    use crate::qgan::{batch_loss_disc, batch_loss_gen};

    fn small_cfg(epochs: usize) -> TrainConfig {
        TrainConfig {
            epochs,
            exact_mode: true,
            seed: 11,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn one_epoch_bookkeeping() {
        let data = synth_dataset(200, 1).unwrap();
        let out = train_full_qgan(&data, &small_cfg(1), &SpsaConfig::default()).unwrap();
        assert_eq!(out.losses.len(), 1);
        assert_eq!(out.mse_curve.len(), 1);
        assert_eq!(out.disc_updates + out.gen_updates, 8 * (5 + 1));
        assert_eq!(out.disc_updates, 40);
        assert_eq!(out.loss_evaluations, 8 * (5 + 1) * 2);
        let l = out.losses[0];
        assert!((l.disc_total - (l.disc_true + l.disc_fake)).abs() < 1e-15);
    }

    #[test]
    fn same_seed_same_curves() {
        let data = synth_dataset(200, 2).unwrap();
        let a = train_full_qgan(&data, &small_cfg(3), &SpsaConfig::default()).unwrap();
        let b = train_full_qgan(&data, &small_cfg(3), &SpsaConfig::default()).unwrap();
        assert_eq!(a, b);
        let shot_cfg = TrainConfig {
            exact_mode: false,
            ..small_cfg(1)
        };
        let a = train_full_qgan(&data, &shot_cfg, &SpsaConfig::default()).unwrap();
        let b = train_full_qgan(&data, &shot_cfg, &SpsaConfig::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_tiny_training_sets() {
        let data = synth_dataset(1, 2).unwrap();
        assert!(train_full_qgan(&data, &small_cfg(1), &SpsaConfig::default()).is_err());
        assert!(train_full_qgan(&[], &small_cfg(1), &SpsaConfig::default()).is_err());
    }

    #[test]
    fn cached_states_match_assembled_circuits() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let data = synth_dataset(8, 4).unwrap();
        let stats = compute_stats(&data).unwrap();
        let cfg = small_cfg(1);
        let params = GanParams {
            gen: (0..20).map(|_| rng.random_range(-1.0..1.0)).collect(),
            disc: (0..20).map(|_| rng.random_range(-1.0..1.0)).collect(),
        };
        let noise = draw_noise(&cfg, &stats, &mut rng).unwrap();
        let gen_gates = mera_gates(&build_mera_up(), &params.gen).unwrap();
        let disc_gates = mera_gates(&disc_template(), &params.disc).unwrap();
        let true_states: Vec<_> = data
            .iter()
            .map(|im| encoded_state(im, &cfg.encoding).unwrap())
            .collect();
        let fake_states: Vec<_> = noise
            .iter()
            .map(|n| generator_state(n, &gen_gates).unwrap())
            .collect();
        let (t, f) = disc_terms(
            &true_states,
            &fake_states,
            &disc_gates,
            &cfg,
            Readout::Exact,
            &mut rng,
        )
        .unwrap();
        let reference = batch_loss_disc(&params, &data, &noise, &cfg, &mut rng).unwrap();
        assert_eq!(t, reference.true_term);
        assert_eq!(f, reference.fake_term);

        let mut gen = 0.0;
        for s in &fake_states {
            gen += bce_loss(
                score_state(s, &disc_gates, Readout::Exact, &mut rng).unwrap(),
                cfg.label_true,
            );
        }
        let reference = batch_loss_gen(&params, &noise, &cfg, &mut rng).unwrap();
        assert_eq!(gen / 8.0, reference);
    }

    #[test]
    fn sampler_is_without_replacement_within_epoch() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut sampler = BatchSampler::new(40);
        sampler.start_epoch(&mut rng);
        let mut seen: Vec<usize> = (0..5)
            .flat_map(|_| sampler.next_batch(8, &mut rng))
            .collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..40).collect::<Vec<_>>());
        assert_eq!(sampler.next_batch(8, &mut rng).len(), 8);
    }
}
