//! Angle encoding of pixel energies and decoding of measurement statistics.
//!
//! A pixel energy `E` maps linearly to a Bloch-sphere angle `theta` in the x-z plane,
//! measured from `|+>`: `E_min` sits at `|1>` (`theta = -theta_max`) and `E_max` at
//! `|0>` (`theta = +theta_max`). Decoding reads the z-axis intersection
//! `z = P(|0>) - P(|1>)` and inverts through `theta = asin(z)`.

use std::f64::consts::FRAC_PI_2;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qsim::ShotCounts;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EncodingSpec {
    /// MeV
    pub e_min: f64,
    /// MeV
    pub e_max: f64,
    pub theta_max: f64,
}

impl Default for EncodingSpec {
    fn default() -> Self {
        Self {
            e_min: 0.0,
            e_max: 0.6,
            theta_max: FRAC_PI_2,
        }
    }
}

impl EncodingSpec {
    pub fn new(e_min: f64, e_max: f64) -> Result<Self> {
        if !(e_max > e_min) || !e_min.is_finite() || !e_max.is_finite() {
            return Err(Error::InvalidValue(format!(
                "energy range [{e_min}, {e_max}]"
            )));
        }
        Ok(Self {
            e_min,
            e_max,
            theta_max: FRAC_PI_2,
        })
    }

    pub fn span(&self) -> f64 {
        self.e_max - self.e_min
    }

    /// Radians of angle per MeV of energy.
    pub fn slope(&self) -> f64 {
        2.0 * self.theta_max / self.span()
    }
}

/// Running count of energies clamped into the encodable range.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClampStats {
    pub clamped: usize,
    pub total: usize,
}

/// `theta = slope * (E - E_min) - theta_max`. Energies above `e_max` are clamped.
pub fn encode_energy(energy: f64, spec: &EncodingSpec, clamps: &mut ClampStats) -> Result<f64> {
    if energy.is_nan() || energy < spec.e_min {
        return Err(Error::InvalidValue(format!(
            "pixel energy {energy} MeV below {} MeV",
            spec.e_min
        )));
    }
    clamps.total += 1;
    let e = if energy > spec.e_max {
        clamps.clamped += 1;
        warn!("pixel energy {energy} MeV clamped to {} MeV", spec.e_max);
        spec.e_max
    } else {
        energy
    };
    Ok(spec.slope() * (e - spec.e_min) - spec.theta_max)
}

pub fn encode_image(
    pixels: &[f64],
    spec: &EncodingSpec,
    clamps: &mut ClampStats,
) -> Result<Vec<f64>> {
    pixels
        .iter()
        .map(|&e| encode_energy(e, spec, clamps))
        .collect()
}

/// Gate angle realising Bloch angle `theta` when applied after H.
///
/// With the simulator's RY convention `RY(a) H |0>` has `P(|0>) = (1 - sin a) / 2`,
/// so the gate angle is `-theta`.
pub fn encoding_angle_to_gate(theta: f64) -> f64 {
    -theta
}

/// Energy for an observed `|0>` fraction.
pub fn decode_probability(p_zero: f64, spec: &EncodingSpec) -> f64 {
    let z = (2.0 * p_zero - 1.0).clamp(-1.0, 1.0);
    let theta = z.asin();
    let e = (theta + spec.theta_max) / (2.0 * spec.theta_max) * spec.span() + spec.e_min;
    e.clamp(spec.e_min, spec.e_max)
}

pub fn decode_counts(counts: &ShotCounts, spec: &EncodingSpec) -> f64 {
    decode_probability(counts.frac_zero(), spec)
}
