//! Dense-matrix reference simulator built from Kronecker products.

#![allow(dead_code)]

use num_complex::Complex64;
use qgan_core::Gate;
use rand::Rng;

pub type Matrix = Vec<Vec<Complex64>>;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn identity(dim: usize) -> Matrix {
    (0..dim)
        .map(|i| {
            (0..dim)
                .map(|j| c(if i == j { 1.0 } else { 0.0 }))
                .collect()
        })
        .collect()
}

pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (ra, rb) = (a.len(), b.len());
    let mut out = vec![vec![c(0.0); ra * rb]; ra * rb];
    for i in 0..ra {
        for j in 0..ra {
            for k in 0..rb {
                for l in 0..rb {
                    out[i * rb + k][j * rb + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

pub fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.len();
    let mut out = vec![vec![c(0.0); n]; n];
    for i in 0..n {
        for k in 0..n {
            if a[i][k] == c(0.0) {
                continue;
            }
            for j in 0..n {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

pub fn matvec(a: &Matrix, v: &[Complex64]) -> Vec<Complex64> {
    a.iter()
        .map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum())
        .collect()
}

fn one_qubit(u: [[f64; 2]; 2]) -> Matrix {
    u.iter()
        .map(|row| row.iter().map(|&x| c(x)).collect())
        .collect()
}

/// `ops[q]` acts on qubit `q`; qubit `n - 1` is the leftmost factor.
fn tensor(ops: &[Matrix]) -> Matrix {
    ops.iter()
        .rev()
        .fold(vec![vec![c(1.0)]], |acc, op| kron(&acc, op))
}

pub fn gate_matrix(gate: &Gate, n: usize) -> Matrix {
    let id = identity(2);
    match *gate {
        Gate::H { target } => {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            let mut ops = vec![id; n];
            ops[target] = one_qubit([[s, s], [s, -s]]);
            tensor(&ops)
        }
        Gate::Ry { target, angle } => {
            let (sn, cs) = (angle / 2.0).sin_cos();
            let mut ops = vec![id; n];
            ops[target] = one_qubit([[cs, -sn], [sn, cs]]);
            tensor(&ops)
        }
        Gate::Cx { control, target } => {
            let p0 = one_qubit([[1.0, 0.0], [0.0, 0.0]]);
            let p1 = one_qubit([[0.0, 0.0], [0.0, 1.0]]);
            let x = one_qubit([[0.0, 1.0], [1.0, 0.0]]);
            let mut keep = vec![id.clone(); n];
            keep[control] = p0;
            let mut flip = vec![id; n];
            flip[control] = p1;
            flip[target] = x;
            let (a, b) = (tensor(&keep), tensor(&flip));
            a.iter()
                .zip(&b)
                .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x + y).collect())
                .collect()
        }
    }
}

pub fn circuit_matrix(gates: &[Gate], n: usize) -> Matrix {
    gates
        .iter()
        .fold(identity(1 << n), |acc, g| matmul(&gate_matrix(g, n), &acc))
}

pub fn oracle_state(gates: &[Gate], n: usize) -> Vec<Complex64> {
    let mut v = vec![c(0.0); 1 << n];
    v[0] = c(1.0);
    for g in gates {
        v = matvec(&gate_matrix(g, n), &v);
    }
    v
}

pub fn random_gate<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Gate {
    let kinds = if n > 1 { 3 } else { 2 };
    match rng.random_range(0..kinds) {
        0 => Gate::h(rng.random_range(0..n)),
        1 => Gate::ry(
            rng.random_range(0..n),
            rng.random_range(-2.0 * std::f64::consts::PI..2.0 * std::f64::consts::PI),
        ),
        _ => {
            let control = rng.random_range(0..n);
            let target = (control + rng.random_range(1..n)) % n;
            Gate::cx(control, target)
        }
    }
}

pub fn random_circuit<R: Rng + ?Sized>(n: usize, len: usize, rng: &mut R) -> Vec<Gate> {
    (0..len).map(|_| random_gate(n, rng)).collect()
}

pub fn max_amp_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}
