//! Parameterised circuit templates: MERA-down discriminator, MERA-up generator,
//! the noise layer and the true-image encoding layer.
//!
//! The eight-qubit MERA-down layout, in block order:
//!
//! ```text
//! disentanglers  (1,2) (3,4) (5,6)
//! isometries     (0,1) (2,3) (4,5) (6,7)
//!                (1,3) (5,7)
//!                (3,7)              -> qubit 7 is read out
//! ```
//!
//! A down block on `(a, b)` is `RY(a) RY(b) CX(a->b)`. MERA-up is the operational
//! mirror: blocks in reverse order, each `CX(a->b) RY(b) RY(a)`.

use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::codec::{encoding_angle_to_gate, EncodingSpec};
use crate::data::N_PIXELS;
use crate::error::{Error, Result};
use crate::qsim::Gate;

pub const N_QUBITS: usize = 8;
pub const N_MERA_PARAMS: usize = 20;
pub const DISC_OUTPUT_QUBIT: usize = 7;

const MERA_DOWN_BLOCKS: [(usize, usize); 10] = [
    (1, 2),
    (3, 4),
    (5, 6),
    (0, 1),
    (2, 3),
    (4, 5),
    (6, 7),
    (1, 3),
    (5, 7),
    (3, 7),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Up,
    Down,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Slot {
    Fixed(Gate),
    /// Trainable RY whose angle is `params[param_id]`.
    Param {
        target: usize,
        param_id: usize,
    },
}

impl Slot {
    pub fn target(&self) -> usize {
        match *self {
            Slot::Fixed(g) => g.target(),
            Slot::Param { target, .. } => target,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitSpec {
    n_qubits: usize,
    slots: Vec<Slot>,
    n_params: usize,
}

impl CircuitSpec {
    pub fn new(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            slots: Vec::new(),
            n_params: 0,
        }
    }

    /// Checks qubit indices and that parameter ids are exactly `0..n_params`.
    pub fn from_slots(n_qubits: usize, slots: Vec<Slot>) -> Result<Self> {
        let mut seen = Vec::new();
        for slot in &slots {
            match slot {
                Slot::Fixed(g) => g.validate(n_qubits)?,
                Slot::Param { target, param_id } => {
                    if *target >= n_qubits {
                        return Err(Error::QubitIndex {
                            index: *target,
                            n_qubits,
                        });
                    }
                    if seen.len() <= *param_id {
                        seen.resize(param_id + 1, false);
                    }
                    seen[*param_id] = true;
                }
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidValue(format!(
                "parameter ids not contiguous: id {missing} unused"
            )));
        }
        Ok(Self {
            n_qubits,
            n_params: seen.len(),
            slots,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn is_bound(&self) -> bool {
        self.n_params == 0
    }

    pub fn push_gate(&mut self, gate: Gate) -> Result<()> {
        gate.validate(self.n_qubits)?;
        self.slots.push(Slot::Fixed(gate));
        Ok(())
    }

    /// Substitutes `params` into every slot, yielding a fully bound circuit.
    pub fn bind(&self, params: &[f64]) -> Result<CircuitSpec> {
        if params.len() != self.n_params {
            return Err(Error::ParamCount {
                expected: self.n_params,
                got: params.len(),
            });
        }
        let slots = self
            .slots
            .iter()
            .map(|slot| match *slot {
                Slot::Fixed(g) => Slot::Fixed(g),
                Slot::Param { target, param_id } => Slot::Fixed(Gate::ry(target, params[param_id])),
            })
            .collect();
        Ok(CircuitSpec {
            n_qubits: self.n_qubits,
            slots,
            n_params: 0,
        })
    }

    /// Appends a bound circuit.
    pub fn append(&mut self, other: &CircuitSpec) -> Result<()> {
        if other.n_qubits != self.n_qubits {
            return Err(Error::InvalidValue(format!(
                "cannot append {}-qubit circuit to {}-qubit circuit",
                other.n_qubits, self.n_qubits
            )));
        }
        if !other.is_bound() {
            return Err(Error::Unbound(other.n_params));
        }
        self.slots.extend_from_slice(&other.slots);
        Ok(())
    }

    /// Gate list of a fully bound circuit.
    pub fn gates(&self) -> Result<Vec<Gate>> {
        if !self.is_bound() {
            return Err(Error::Unbound(
                self.slots
                    .iter()
                    .filter(|s| matches!(s, Slot::Param { .. }))
                    .count(),
            ));
        }
        Ok(self
            .slots
            .iter()
            .map(|slot| match *slot {
                Slot::Fixed(g) => g,
                Slot::Param { .. } => unreachable!("bound circuit has no parameter slots"),
            })
            .collect())
    }

    /// One gate per line: `KIND target [control] [angle]`. Free slots print as `RY target p<id>`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for slot in &self.slots {
            match slot {
                Slot::Fixed(g) => writeln!(out, "{g}"),
                Slot::Param { target, param_id } => writeln!(out, "RY {target} p{param_id}"),
            }
            .expect("writing to a String cannot fail");
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeraLayout {
    pub direction: Direction,
    pub blocks: Vec<(usize, usize)>,
    pub output_qubit: Option<usize>,
}

impl MeraLayout {
    pub fn down() -> Self {
        Self {
            direction: Direction::Down,
            blocks: MERA_DOWN_BLOCKS.to_vec(),
            output_qubit: Some(DISC_OUTPUT_QUBIT),
        }
    }

    pub fn up() -> Self {
        Self {
            direction: Direction::Up,
            blocks: MERA_DOWN_BLOCKS.iter().rev().copied().collect(),
            output_qubit: None,
        }
    }

    pub fn to_circuit(&self) -> CircuitSpec {
        let mut slots = Vec::with_capacity(3 * self.blocks.len());
        for (k, &(a, b)) in self.blocks.iter().enumerate() {
            let (first, second) = (2 * k, 2 * k + 1);
            match self.direction {
                Direction::Down => {
                    slots.push(Slot::Param {
                        target: a,
                        param_id: first,
                    });
                    slots.push(Slot::Param {
                        target: b,
                        param_id: second,
                    });
                    slots.push(Slot::Fixed(Gate::cx(a, b)));
                }
                Direction::Up => {
                    slots.push(Slot::Fixed(Gate::cx(a, b)));
                    slots.push(Slot::Param {
                        target: b,
                        param_id: first,
                    });
                    slots.push(Slot::Param {
                        target: a,
                        param_id: second,
                    });
                }
            }
        }
        CircuitSpec::from_slots(N_QUBITS, slots).expect("static MERA layout is valid")
    }
}

pub fn build_mera_down() -> CircuitSpec {
    MeraLayout::down().to_circuit()
}

pub fn build_mera_up() -> CircuitSpec {
    MeraLayout::up().to_circuit()
}

/// Per-image RY noise angles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseVector {
    pub omegas: [f64; N_QUBITS],
    pub shared_shift: f64,
}

impl NoiseVector {
    pub fn zero() -> Self {
        Self {
            omegas: [0.0; N_QUBITS],
            shared_shift: 0.0,
        }
    }

    /// `omega_i = u_i * slope * sigma_i + r`.
    pub fn from_draws(
        unit_draws: &[f64; N_QUBITS],
        shared_shift: f64,
        pixel_stds: &[f64; N_PIXELS],
        spec: &EncodingSpec,
    ) -> Result<Self> {
        check_stds(pixel_stds)?;
        if unit_draws.iter().any(|u| !(-1.0..=1.0).contains(u)) {
            return Err(Error::InvalidValue("noise draw outside [-1, 1]".into()));
        }
        if !(-0.25..=0.25).contains(&shared_shift) {
            return Err(Error::InvalidValue(format!(
                "shared shift {shared_shift} outside [-1/4, 1/4]"
            )));
        }
        let slope = spec.slope();
        let mut omegas = [0.0; N_QUBITS];
        for (omega, (u, sigma)) in omegas.iter_mut().zip(unit_draws.iter().zip(pixel_stds)) {
            *omega = u * slope * sigma + shared_shift;
        }
        Ok(Self {
            omegas,
            shared_shift,
        })
    }
}

fn check_stds(pixel_stds: &[f64]) -> Result<()> {
    match pixel_stds.iter().find(|s| !(**s >= 0.0) || !s.is_finite()) {
        Some(s) => Err(Error::InvalidValue(format!("pixel std {s} must be >= 0"))),
        None => Ok(()),
    }
}

pub fn build_noise_layer<R: Rng + ?Sized>(
    pixel_stds: &[f64; N_PIXELS],
    spec: &EncodingSpec,
    rng: &mut R,
) -> Result<NoiseVector> {
    check_stds(pixel_stds)?;
    let mut draws = [0.0; N_QUBITS];
    for u in draws.iter_mut() {
        *u = rng.random_range(-1.0..=1.0);
    }
    let shift = rng.random_range(-0.25..=0.25);
    NoiseVector::from_draws(&draws, shift, pixel_stds, spec)
}

fn check_params(params: &[f64]) -> Result<()> {
    if params.len() != N_MERA_PARAMS {
        return Err(Error::ParamCount {
            expected: N_MERA_PARAMS,
            got: params.len(),
        });
    }
    Ok(())
}

/// H on every qubit followed by the noise rotations and the bound generator.
pub fn assemble_generator(noise: &NoiseVector, gen_params: &[f64]) -> Result<CircuitSpec> {
    check_params(gen_params)?;
    let mut circuit = CircuitSpec::new(N_QUBITS);
    for q in 0..N_QUBITS {
        circuit.push_gate(Gate::h(q))?;
    }
    for (q, &omega) in noise.omegas.iter().enumerate() {
        circuit.push_gate(Gate::ry(q, omega))?;
    }
    circuit.append(&build_mera_up().bind(gen_params)?)?;
    Ok(circuit)
}

/// Generator and discriminator fused into one circuit, no intermediate measurement.
pub fn assemble_fake_pass(
    noise: &NoiseVector,
    gen_params: &[f64],
    disc_params: &[f64],
) -> Result<CircuitSpec> {
    check_params(disc_params)?;
    let mut circuit = assemble_generator(noise, gen_params)?;
    circuit.append(&build_mera_down().bind(disc_params)?)?;
    Ok(circuit)
}

/// Angle-encoded true image followed by the bound discriminator.
pub fn assemble_true_pass(image_thetas: &[f64], disc_params: &[f64]) -> Result<CircuitSpec> {
    if image_thetas.len() != N_QUBITS {
        return Err(Error::ParamCount {
            expected: N_QUBITS,
            got: image_thetas.len(),
        });
    }
    check_params(disc_params)?;
    let mut circuit = CircuitSpec::new(N_QUBITS);
    for q in 0..N_QUBITS {
        circuit.push_gate(Gate::h(q))?;
    }
    for (q, &theta) in image_thetas.iter().enumerate() {
        circuit.push_gate(Gate::ry(q, encoding_angle_to_gate(theta)))?;
    }
    circuit.append(&build_mera_down().bind(disc_params)?)?;
    Ok(circuit)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_PI_2;

    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::qsim::StateVector;

    fn count(circuit: &CircuitSpec) -> (usize, usize, usize, usize) {
        let (mut h, mut ry, mut cx, mut free) = (0, 0, 0, 0);
        for slot in circuit.slots() {
            match slot {
                Slot::Fixed(Gate::H { .. }) => h += 1,
                Slot::Fixed(Gate::Ry { .. }) => ry += 1,
                Slot::Fixed(Gate::Cx { .. }) => cx += 1,
                Slot::Param { .. } => free += 1,
            }
        }
        (h, ry, cx, free)
    }

    #[test]
    fn mera_down_shape() {
        let down = build_mera_down();
        assert_eq!(down.n_params(), N_MERA_PARAMS);
        assert_eq!(count(&down), (0, 0, 10, 20));
        let layout = MeraLayout::down();
        assert_eq!(layout.blocks.len(), 10);
        assert_eq!(layout.output_qubit, Some(7));
        assert_eq!(layout.blocks.last().unwrap().1, 7);
        assert_eq!(down.slots().last().unwrap(), &Slot::Fixed(Gate::cx(3, 7)));
    }

    #[test]
    fn mera_up_mirrors_down() {
        let up = build_mera_up();
        let down = build_mera_down();
        assert_eq!(up.n_params(), N_MERA_PARAMS);
        assert_eq!(MeraLayout::up().blocks.len(), 10);
        let shape = |s: &Slot| match *s {
            Slot::Fixed(g) => (0, g.target(), g.control()),
            Slot::Param { target, .. } => (1, target, None),
        };
        let up_shape: Vec<_> = up.slots().iter().map(shape).collect();
        let down_rev: Vec<_> = down.slots().iter().rev().map(shape).collect();
        assert_eq!(up_shape, down_rev);
    }

    #[test]
    fn param_ids_follow_gate_order() {
        for circuit in [build_mera_up(), build_mera_down()] {
            let ids: Vec<usize> = circuit
                .slots()
                .iter()
                .filter_map(|s| match s {
                    Slot::Param { param_id, .. } => Some(*param_id),
                    _ => None,
                })
                .collect();
            assert_eq!(ids, (0..N_MERA_PARAMS).collect::<Vec<_>>());
        }
    }

    #[test]
    fn zero_disc_on_uniform_superposition_outputs_half() {
        let mut circuit = CircuitSpec::new(N_QUBITS);
        for q in 0..N_QUBITS {
            circuit.push_gate(Gate::h(q)).unwrap();
        }
        circuit
            .append(&build_mera_down().bind(&[0.0; N_MERA_PARAMS]).unwrap())
            .unwrap();
        let mut state = StateVector::init_zero(N_QUBITS).unwrap();
        state.apply_all(&circuit.gates().unwrap()).unwrap();
        assert!((state.prob_one(DISC_OUTPUT_QUBIT).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn zero_params_up_is_pure_cx_network() {
        let bound = build_mera_up().bind(&[0.0; N_MERA_PARAMS]).unwrap();
        for g in bound.gates().unwrap() {
            if let Gate::Ry { angle, .. } = g {
                assert_eq!(angle, 0.0);
            }
        }
    }

    #[test]
    fn from_slots_rejects_gaps_and_bad_indices() {
        let gap = vec![
            Slot::Param {
                target: 0,
                param_id: 0,
            },
            Slot::Param {
                target: 1,
                param_id: 2,
            },
        ];
        assert!(CircuitSpec::from_slots(2, gap).is_err());
        let oob = vec![Slot::Param {
            target: 3,
            param_id: 0,
        }];
        assert!(CircuitSpec::from_slots(2, oob).is_err());
    }

    #[test]
    fn bind_checks_length() {
        assert!(matches!(
            build_mera_down().bind(&[0.0; 19]),
            Err(Error::ParamCount {
                expected: 20,
                got: 19
            })
        ));
        assert!(build_mera_down().gates().is_err());
    }

    #[test]
    fn noise_degenerate_and_scaled() {
        let spec = EncodingSpec::default();
        let zero = NoiseVector::from_draws(&[0.3; 8], 0.0, &[0.0; 8], &spec).unwrap();
        assert_eq!(zero.omegas, [0.0; 8]);

        let half = [spec.e_max / 2.0; 8];
        let scaled = NoiseVector::from_draws(&[1.0; 8], 0.0, &half, &spec).unwrap();
        for omega in scaled.omegas {
            assert!((omega - FRAC_PI_2).abs() < 1e-15);
        }
    }

    #[test]
    fn noise_rejects_negative_std() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut stds = [0.01; 8];
        stds[3] = -0.1;
        assert!(build_noise_layer(&stds, &EncodingSpec::default(), &mut rng).is_err());
    }

    #[test]
    fn noise_draws_stay_in_bounds() {
        let spec = EncodingSpec::default();
        let stds = [0.0, 0.01, 0.02, 0.05, 0.08, 0.1, 0.2, 0.3];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100_000 {
            let noise = build_noise_layer(&stds, &spec, &mut rng).unwrap();
            assert!((-0.25..=0.25).contains(&noise.shared_shift));
            for (omega, sigma) in noise.omegas.iter().zip(&stds) {
                let bound = spec.slope() * sigma + 0.25;
                assert!(omega.abs() <= bound + 1e-15);
            }
        }
    }

    #[test]
    fn fake_pass_structure() {
        let circuit = assemble_fake_pass(&NoiseVector::zero(), &[0.0; 20], &[0.0; 20]).unwrap();
        assert!(circuit.is_bound());
        assert_eq!(count(&circuit), (8, 48, 20, 0));
        assert_eq!(circuit.len(), 16 + 40 + 20);
    }

    #[test]
    fn fake_pass_orders_generator_before_discriminator() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let gen: Vec<f64> = (0..20).map(|_| rng.random_range(-1.0..1.0)).collect();
        let disc: Vec<f64> = (0..20).map(|_| rng.random_range(-1.0..1.0)).collect();
        let noise = build_noise_layer(&[0.05; 8], &EncodingSpec::default(), &mut rng).unwrap();
        let circuit = assemble_fake_pass(&noise, &gen, &disc).unwrap();
        let gates = circuit.gates().unwrap();
        let gen_gates = build_mera_up().bind(&gen).unwrap().gates().unwrap();
        let disc_gates = build_mera_down().bind(&disc).unwrap().gates().unwrap();
        assert_eq!(&gates[16..46], gen_gates.as_slice());
        assert_eq!(&gates[46..], disc_gates.as_slice());
        assert_eq!(assemble_fake_pass(&noise, &gen, &disc).unwrap(), circuit);
    }

    #[test]
    fn fake_pass_rejects_wrong_lengths() {
        let noise = NoiseVector::zero();
        assert!(assemble_fake_pass(&noise, &[0.0; 21], &[0.0; 20]).is_err());
        assert!(assemble_fake_pass(&noise, &[0.0; 20], &[0.0; 2]).is_err());
        assert!(assemble_true_pass(&[0.0; 7], &[0.0; 20]).is_err());
    }

    #[test]
    fn true_pass_structure_and_angles() {
        let circuit = assemble_true_pass(&[0.0; 8], &[0.0; 20]).unwrap();
        assert_eq!(count(&circuit), (8, 28, 10, 0));
        let gates = circuit.gates().unwrap();
        for g in &gates[8..16] {
            assert_eq!(g.angle(), Some(0.0));
        }
        let bottom = assemble_true_pass(&[-FRAC_PI_2; 8], &[0.0; 20]).unwrap();
        let gates = bottom.gates().unwrap();
        for g in &gates[8..16] {
            assert_eq!(g.angle(), Some(encoding_angle_to_gate(-FRAC_PI_2)));
        }
        assert_eq!(
            bottom,
            assemble_true_pass(&[-FRAC_PI_2; 8], &[0.0; 20]).unwrap()
        );
    }

    #[test]
    fn text_export() {
        let text = build_mera_down().to_text();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 30);
        assert_eq!(lines[0], "RY 1 p0");
        assert_eq!(lines[2], "CX 2 1");
    }
}
