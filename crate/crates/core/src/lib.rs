//! Quantum GAN for eight-pixel calorimeter shower images.
//!
//! The crate is organised bottom-up:
//!
//! * [`qsim`]: dense statevector simulation for the {H, RY, CX} gate set.
//! * [`circuits`]: MERA-up generator, MERA-down discriminator, noise and encoding layers.
//! * [`codec`]: pixel energy <-> rotation angle <-> measurement statistics.
//! * [`data`]: synthetic shower images, CSV ingestion and per-pixel statistics.
//! * [`qgan`]: the fully quantum adversarial training loop driven by SPSA.
//! * [`hybrid`]: the quantum generator against a classical fully-connected discriminator.
//! * [`metrics`]: average-image MSE and aggregation over repeated trials.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod circuits;
pub mod codec;
pub mod data;
pub mod error;
pub mod hybrid;
pub mod metrics;
pub mod qgan;
pub mod qsim;

pub use circuits::{CircuitSpec, MeraLayout, NoiseVector, Slot, N_MERA_PARAMS};
pub use codec::{ClampStats, EncodingSpec};
pub use data::{DatasetStats, ShowerImage, ShowerProfile, N_PIXELS};
pub use error::{Error, Result};
pub use hybrid::{HybridConfig, HybridOutcome, MlpSize, MlpSpec};
pub use metrics::{MseResult, TrialStats};
pub use qgan::{GanParams, LossRecord, SpsaConfig, TrainConfig, TrainOutcome};
pub use qsim::{Gate, ShotCounts, StateVector};
