//! Fully quantum GAN: MERA-up generator and MERA-down discriminator sharing one register.
//!
//! The discriminator reads qubit 7; `|1>` means "true image". Both players are trained with
//! SPSA on binary cross entropy with two-sided label smoothing, five discriminator updates per
//! generator update.

mod loss;
mod spsa;
pub(crate) mod train;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuits::{
    self, build_mera_down, CircuitSpec, NoiseVector, DISC_OUTPUT_QUBIT, N_MERA_PARAMS, N_QUBITS,
};
use crate::codec::{self, ClampStats, EncodingSpec};
use crate::data::{DatasetStats, ShowerImage, N_PIXELS};
use crate::error::{Error, Result};
use crate::qsim::{Gate, StateVector};

pub use loss::{bce_loss, LOSS_EPS};
pub use spsa::{spsa_step, SpsaConfig};
pub use train::{train_full_qgan, train_full_qgan_with, LossRecord, TrainOutcome};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub gen_lr: f64,
    pub disc_lr: f64,
    pub gen_decay: f64,
    pub disc_decay: f64,
    pub epochs: usize,
    pub steps_per_epoch: usize,
    pub batch_size: usize,
    pub disc_steps_per_gen_step: usize,
    pub shots: u64,
    pub label_true: f64,
    pub label_fake: f64,
    pub exact_mode: bool,
    pub seed: u64,
    /// Images per side in the per-epoch MSE evaluation.
    pub mse_sample: usize,
    pub encoding: EncodingSpec,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            gen_lr: 0.02,
            disc_lr: 0.04,
            gen_decay: 0.006,
            disc_decay: 0.007,
            epochs: 1000,
            steps_per_epoch: 8,
            batch_size: 8,
            disc_steps_per_gen_step: 5,
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

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let rates = [self.gen_lr, self.disc_lr, self.gen_decay, self.disc_decay];
        if rates.iter().any(|r| !(*r > 0.0)) {
            return Err(Error::InvalidValue(format!(
                "learning rates and decays must be > 0: {rates:?}"
            )));
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
        if self.exact_mode {
            Readout::Exact
        } else {
            Readout::Shots(self.shots)
        }
    }
}

/// How qubit probabilities are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Readout {
    Exact,
    Shots(u64),
}

impl Readout {
    pub fn new(exact: bool, shots: u64) -> Self {
        if exact {
            Readout::Exact
        } else {
            Readout::Shots(shots)
        }
    }

    /// `P(|1>)` on `qubit`, exactly or estimated from shots.
    pub fn prob_one<R: Rng + ?Sized>(
        &self,
        state: &StateVector,
        qubit: usize,
        rng: &mut R,
    ) -> Result<f64> {
        match *self {
            Readout::Exact => state.prob_one(qubit),
            Readout::Shots(shots) => Ok(state.sample_qubit(qubit, shots, rng)?.frac_one()),
        }
    }

    pub fn prob_zero<R: Rng + ?Sized>(
        &self,
        state: &StateVector,
        qubit: usize,
        rng: &mut R,
    ) -> Result<f64> {
        match *self {
            Readout::Exact => state.prob_zero(qubit),
            Readout::Shots(shots) => Ok(state.sample_qubit(qubit, shots, rng)?.frac_zero()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GanParams {
    pub gen: Vec<f64>,
    pub disc: Vec<f64>,
}

impl Default for GanParams {
    fn default() -> Self {
        Self::zeros()
    }
}

impl GanParams {
    pub fn zeros() -> Self {
        Self {
            gen: vec![0.0; N_MERA_PARAMS],
            disc: vec![0.0; N_MERA_PARAMS],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for v in [&self.gen, &self.disc] {
            if v.len() != N_MERA_PARAMS {
                return Err(Error::ParamCount {
                    expected: N_MERA_PARAMS,
                    got: v.len(),
                });
            }
        }
        Ok(())
    }
}

pub fn decay_lr(lr0: f64, decay: f64, epoch: usize) -> f64 {
    lr0 * (-decay * epoch as f64).exp()
}

/// True/fake probability read from the discriminator qubit of a bound 8-qubit circuit.
pub fn discriminator_output<R: Rng + ?Sized>(
    circuit: &CircuitSpec,
    readout: Readout,
    rng: &mut R,
) -> Result<f64> {
    if circuit.n_qubits() != N_QUBITS {
        return Err(Error::InvalidValue(format!(
            "discriminator expects {N_QUBITS} qubits, circuit has {}",
            circuit.n_qubits()
        )));
    }
    let gates = circuit.gates()?;
    let mut state = StateVector::init_zero(N_QUBITS)?;
    state.apply_all(&gates)?;
    readout.prob_one(&state, DISC_OUTPUT_QUBIT, rng)
}

/// `|+>` register rotated by the noise angles and then by the generator.
pub(crate) fn generator_state(noise: &NoiseVector, gen_gates: &[Gate]) -> Result<StateVector> {
    let mut state = StateVector::init_zero(N_QUBITS)?;
    for q in 0..N_QUBITS {
        state.apply_gate(&Gate::h(q))?;
    }
    for (q, &omega) in noise.omegas.iter().enumerate() {
        state.apply_gate(&Gate::ry(q, omega))?;
    }
    state.apply_all(gen_gates)?;
    Ok(state)
}

pub(crate) fn encoded_state(image: &ShowerImage, spec: &EncodingSpec) -> Result<StateVector> {
    let thetas = codec::encode_image(&image.pixels, spec, &mut ClampStats::default())?;
    let mut state = StateVector::init_zero(N_QUBITS)?;
    for q in 0..N_QUBITS {
        state.apply_gate(&Gate::h(q))?;
    }
    for (q, &theta) in thetas.iter().enumerate() {
        state.apply_gate(&Gate::ry(q, codec::encoding_angle_to_gate(theta)))?;
    }
    Ok(state)
}

pub(crate) fn mera_gates(template: &CircuitSpec, params: &[f64]) -> Result<Vec<Gate>> {
    template.bind(params)?.gates()
}

/// Applies the discriminator to a prepared register and reads the true/fake probability.
pub(crate) fn score_state<R: Rng + ?Sized>(
    prepared: &StateVector,
    disc_gates: &[Gate],
    readout: Readout,
    rng: &mut R,
) -> Result<f64> {
    let mut state = prepared.clone();
    state.apply_all(disc_gates)?;
    readout.prob_one(&state, DISC_OUTPUT_QUBIT, rng)
}

/// The two halves of the discriminator loss, each averaged over the batch.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DiscLoss {
    pub true_term: f64,
    pub fake_term: f64,
}

impl DiscLoss {
    pub fn total(&self) -> f64 {
        self.true_term + self.fake_term
    }
}

/// Mean over the batch of `bce(D(true_i), label_true) + bce(D(fake_i), label_fake)`.
pub fn batch_loss_disc<R: Rng + ?Sized>(
    params: &GanParams,
    batch: &[ShowerImage],
    noise: &[NoiseVector],
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<DiscLoss> {
    params.validate()?;
    if batch.is_empty() {
        return Err(Error::Empty("discriminator batch"));
    }
    if batch.len() != noise.len() {
        return Err(Error::InvalidValue(format!(
            "{} images but {} noise vectors",
            batch.len(),
            noise.len()
        )));
    }
    let readout = cfg.readout();
    let (mut true_term, mut fake_term) = (0.0, 0.0);
    for (image, noise) in batch.iter().zip(noise) {
        let thetas = codec::encode_image(&image.pixels, &cfg.encoding, &mut ClampStats::default())?;
        let true_pass = circuits::assemble_true_pass(&thetas, &params.disc)?;
        true_term += bce_loss(
            discriminator_output(&true_pass, readout, rng)?,
            cfg.label_true,
        );
        let fake_pass = circuits::assemble_fake_pass(noise, &params.gen, &params.disc)?;
        fake_term += bce_loss(
            discriminator_output(&fake_pass, readout, rng)?,
            cfg.label_fake,
        );
    }
    let n = batch.len() as f64;
    Ok(DiscLoss {
        true_term: true_term / n,
        fake_term: fake_term / n,
    })
}

/// Generator loss: fake images scored against the true label.
pub fn batch_loss_gen<R: Rng + ?Sized>(
    params: &GanParams,
    noise: &[NoiseVector],
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<f64> {
    params.validate()?;
    if noise.is_empty() {
        return Err(Error::Empty("generator batch"));
    }
    let readout = cfg.readout();
    let mut total = 0.0;
    for noise in noise {
        let fake_pass = circuits::assemble_fake_pass(noise, &params.gen, &params.disc)?;
        total += bce_loss(
            discriminator_output(&fake_pass, readout, rng)?,
            cfg.label_true,
        );
    }
    Ok(total / noise.len() as f64)
}

/// Decodes every generator qubit of one prepared noise vector into a pixel energy.
pub fn generate_image<R: Rng + ?Sized>(
    gen_params: &[f64],
    noise: &NoiseVector,
    spec: &EncodingSpec,
    readout: Readout,
    rng: &mut R,
) -> Result<ShowerImage> {
    let gates = mera_gates(&circuits::build_mera_up(), gen_params)?;
    decode_generator(&gates, noise, spec, readout, rng)
}

pub(crate) fn decode_generator<R: Rng + ?Sized>(
    gen_gates: &[Gate],
    noise: &NoiseVector,
    spec: &EncodingSpec,
    readout: Readout,
    rng: &mut R,
) -> Result<ShowerImage> {
    let state = generator_state(noise, gen_gates)?;
    let mut pixels = [0.0; N_PIXELS];
    for (q, p) in pixels.iter_mut().enumerate() {
        *p = codec::decode_probability(readout.prob_zero(&state, q, rng)?, spec);
    }
    Ok(ShowerImage::new(pixels))
}

/// `n` images, each from a fresh noise vector scaled by the dataset's pixel spread.
pub fn generate_images<R: Rng + ?Sized>(
    gen_params: &[f64],
    n: usize,
    stats: &DatasetStats,
    spec: &EncodingSpec,
    readout: Readout,
    rng: &mut R,
) -> Result<Vec<ShowerImage>> {
    if n == 0 {
        return Err(Error::Empty("number of images to generate"));
    }
    let gates = mera_gates(&circuits::build_mera_up(), gen_params)?;
    (0..n)
        .map(|_| {
            let noise = circuits::build_noise_layer(&stats.stds, spec, rng)?;
            decode_generator(&gates, &noise, spec, readout, rng)
        })
        .collect()
}

/// Decodes one image per prepared noise vector.
pub fn generate_from_noise<R: Rng + ?Sized>(
    gen_params: &[f64],
    noise: &[NoiseVector],
    spec: &EncodingSpec,
    readout: Readout,
    rng: &mut R,
) -> Result<Vec<ShowerImage>> {
    if noise.is_empty() {
        return Err(Error::Empty("number of images to generate"));
    }
    let gates = mera_gates(&circuits::build_mera_up(), gen_params)?;
    noise
        .iter()
        .map(|n| decode_generator(&gates, n, spec, readout, rng))
        .collect()
}

pub(crate) fn disc_template() -> CircuitSpec {
    build_mera_down()
}
