//! Dense statevector simulation of few-qubit circuits over the {H, RY, CX} gate set.
//!
//! Qubit 0 is the least-significant bit of the basis-state index, so the amplitude
//! of `|q_{n-1} ... q_1 q_0>` lives at index `sum(q_k << k)`.
//!
//! RY uses the matrix `[[cos(a/2), -sin(a/2)], [sin(a/2), cos(a/2)]]`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_QUBITS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Gate {
    H { target: usize },
    Ry { target: usize, angle: f64 },
    Cx { control: usize, target: usize },
}

impl Gate {
    pub fn h(target: usize) -> Self {
        Gate::H { target }
    }

    pub fn ry(target: usize, angle: f64) -> Self {
        Gate::Ry { target, angle }
    }

    pub fn cx(control: usize, target: usize) -> Self {
        Gate::Cx { control, target }
    }

    pub fn target(&self) -> usize {
        match *self {
            Gate::H { target } | Gate::Ry { target, .. } | Gate::Cx { target, .. } => target,
        }
    }

    pub fn control(&self) -> Option<usize> {
        match *self {
            Gate::Cx { control, .. } => Some(control),
            _ => None,
        }
    }

    pub fn angle(&self) -> Option<f64> {
        match *self {
            Gate::Ry { angle, .. } => Some(angle),
            _ => None,
        }
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        let check = |index: usize| {
            if index < n_qubits {
                Ok(())
            } else {
                Err(Error::QubitIndex { index, n_qubits })
            }
        };
        check(self.target())?;
        if let Some(control) = self.control() {
            check(control)?;
            if control == self.target() {
                return Err(Error::ControlIsTarget(control));
            }
        }
        if let Some(angle) = self.angle() {
            if !angle.is_finite() {
                return Err(Error::InvalidValue(format!("RY angle {angle}")));
            }
        }
        Ok(())
    }
}

/// Plain-text form: `KIND target [control] [angle]`.
impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Gate::H { target } => write!(f, "H {target}"),
            Gate::Ry { target, angle } => write!(f, "RY {target} {angle}"),
            Gate::Cx { control, target } => write!(f, "CX {target} {control}"),
        }
    }
}

/// Outcome tally for repeated single-qubit measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotCounts {
    pub qubit: usize,
    pub zeros: u64,
    pub ones: u64,
    pub shots: u64,
}

impl ShotCounts {
    pub fn new(qubit: usize, zeros: u64, ones: u64) -> Result<Self> {
        let shots = zeros + ones;
        if shots == 0 {
            return Err(Error::ZeroShots);
        }
        Ok(Self {
            qubit,
            zeros,
            ones,
            shots,
        })
    }

    pub fn frac_zero(&self) -> f64 {
        self.zeros as f64 / self.shots as f64
    }

    pub fn frac_one(&self) -> f64 {
        self.ones as f64 / self.shots as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0...0>` on `n_qubits` qubits.
    pub fn init_zero(n_qubits: usize) -> Result<Self> {
        if !(1..=MAX_QUBITS).contains(&n_qubits) {
            return Err(Error::QubitCount(n_qubits));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(Self { n_qubits, amps })
    }

    /// Wraps raw amplitudes. The caller is responsible for normalisation.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::StateLength(len));
        }
        let n_qubits = len.trailing_zeros() as usize;
        if n_qubits > MAX_QUBITS {
            return Err(Error::QubitCount(n_qubits));
        }
        Ok(Self { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.n_qubits)?;
        match *gate {
            Gate::H { target } => self.apply_h(target),
            Gate::Ry { target, angle } => self.apply_ry(target, angle),
            Gate::Cx { control, target } => self.apply_cx(control, target),
        }
        Ok(())
    }

    pub fn apply_all<'a>(&mut self, gates: impl IntoIterator<Item = &'a Gate>) -> Result<()> {
        for gate in gates {
            self.apply_gate(gate)?;
        }
        Ok(())
    }

    fn apply_h(&mut self, target: usize) {
        let mask = 1 << target;
        for i in 0..self.amps.len() {
            if i & mask == 0 {
                let a = self.amps[i];
                let b = self.amps[i | mask];
                self.amps[i] = (a + b) * FRAC_1_SQRT_2;
                self.amps[i | mask] = (a - b) * FRAC_1_SQRT_2;
            }
        }
    }

    fn apply_ry(&mut self, target: usize, angle: f64) {
        let (s, c) = (0.5 * angle).sin_cos();
        let mask = 1 << target;
        for i in 0..self.amps.len() {
            if i & mask == 0 {
                let a = self.amps[i];
                let b = self.amps[i | mask];
                self.amps[i] = a * c - b * s;
                self.amps[i | mask] = a * s + b * c;
            }
        }
    }

    fn apply_cx(&mut self, control: usize, target: usize) {
        let cmask = 1 << control;
        let tmask = 1 << target;
        for i in 0..self.amps.len() {
            if i & cmask != 0 && i & tmask == 0 {
                self.amps.swap(i, i | tmask);
            }
        }
    }

    /// Exact probability of reading `|1>` on `qubit`.
    pub fn prob_one(&self, qubit: usize) -> Result<f64> {
        self.check_qubit(qubit)?;
        let mask = 1 << qubit;
        let p: f64 = self
            .amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & mask != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum();
        Ok(p.clamp(0.0, 1.0))
    }

    pub fn prob_zero(&self, qubit: usize) -> Result<f64> {
        Ok(1.0 - self.prob_one(qubit)?)
    }

    /// Simulates `shots` independent measurements of `qubit`.
    pub fn sample_qubit<R: Rng + ?Sized>(
        &self,
        qubit: usize,
        shots: u64,
        rng: &mut R,
    ) -> Result<ShotCounts> {
        if shots == 0 {
            return Err(Error::ZeroShots);
        }
        let p = self.prob_one(qubit)?;
        let ones = Binomial::new(shots, p)
            .map_err(|e| Error::InvalidValue(format!("binomial({shots}, {p}): {e}")))?
            .sample(rng);
        ShotCounts::new(qubit, shots - ones, ones)
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit < self.n_qubits {
            Ok(())
        } else {
            Err(Error::QubitIndex {
                index: qubit,
                n_qubits: self.n_qubits,
            })
        }
    }
}
