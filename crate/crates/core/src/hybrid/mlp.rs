//! Dense feed-forward discriminator with leaky-ReLU hidden layers and a logistic output.
//!
//! Weights are one flat vector; for each layer, the `out x in` weight matrix (row-major)
//! is followed by its `out` biases.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qgan::LOSS_EPS;

pub const LEAKY_SLOPE: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MlpSize {
    S,
    M,
    L,
}

impl MlpSize {
    pub const ALL: [MlpSize; 3] = [MlpSize::S, MlpSize::M, MlpSize::L];
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub layer_widths: Vec<usize>,
}

impl MlpSpec {
    pub fn new(layer_widths: Vec<usize>) -> Result<Self> {
        if layer_widths.len() < 2 || layer_widths.contains(&0) {
            return Err(Error::InvalidValue(format!(
                "layer widths {layer_widths:?}"
            )));
        }
        if layer_widths.last() != Some(&1) {
            return Err(Error::InvalidValue(
                "discriminator output width must be 1".into(),
            ));
        }
        Ok(Self { layer_widths })
    }

    /// 8-8-8-1 (153), 8-16-16-1 (433), 8-32-32-16-1 (1889).
    pub fn for_size(size: MlpSize) -> Self {
        let widths = match size {
            MlpSize::S => vec![8, 8, 8, 1],
            MlpSize::M => vec![8, 16, 16, 1],
            MlpSize::L => vec![8, 32, 32, 16, 1],
        };
        Self::new(widths).expect("static layer widths are valid")
    }

    pub fn n_inputs(&self) -> usize {
        self.layer_widths[0]
    }

    pub fn n_params(&self) -> usize {
        self.layer_widths
            .windows(2)
            .map(|w| w[0] * w[1] + w[1])
            .sum()
    }

    fn layers(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let mut offset = 0;
        self.layer_widths.windows(2).map(move |w| {
            let start = offset;
            offset += w[0] * w[1] + w[1];
            (start, w[0], w[1])
        })
    }

    fn check(&self, weights: &[f64], input: &[f64]) -> Result<()> {
        if weights.len() != self.n_params() {
            return Err(Error::ParamCount {
                expected: self.n_params(),
                got: weights.len(),
            });
        }
        if input.len() != self.n_inputs() {
            return Err(Error::ParamCount {
                expected: self.n_inputs(),
                got: input.len(),
            });
        }
        Ok(())
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init_weights<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut weights = vec![0.0; self.n_params()];
        for (start, fan_in, fan_out) in self.layers() {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for w in &mut weights[start..start + fan_in * fan_out] {
                *w = rng.random_range(-limit..limit);
            }
        }
        weights
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn leaky(z: f64) -> f64 {
    if z > 0.0 {
        z
    } else {
        LEAKY_SLOPE * z
    }
}

fn leaky_grad(z: f64) -> f64 {
    if z > 0.0 {
        1.0
    } else {
        LEAKY_SLOPE
    }
}

/// Activations of every layer; the last entry holds the output logit.
fn forward_trace(spec: &MlpSpec, weights: &[f64], input: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n_layers = spec.layer_widths.len() - 1;
    let mut activations = vec![input.to_vec()];
    let mut pre = Vec::with_capacity(n_layers);
    for (l, (start, n_in, n_out)) in spec.layers().enumerate() {
        let w = &weights[start..start + n_in * n_out];
        let b = &weights[start + n_in * n_out..start + n_in * n_out + n_out];
        let x = &activations[l];
        let z: Vec<f64> = (0..n_out)
            .map(|o| {
                b[o] + w[o * n_in..(o + 1) * n_in]
                    .iter()
                    .zip(x)
                    .map(|(w, x)| w * x)
                    .sum::<f64>()
            })
            .collect();
        let a = if l + 1 == n_layers {
            z.clone()
        } else {
            z.iter().map(|&v| leaky(v)).collect()
        };
        pre.push(z);
        activations.push(a);
    }
    (activations, pre)
}

pub fn mlp_forward(spec: &MlpSpec, weights: &[f64], input: &[f64]) -> Result<f64> {
    spec.check(weights, input)?;
    let (activations, _) = forward_trace(spec, weights, input);
    Ok(sigmoid(activations.last().expect("at least one layer")[0]))
}

/// Gradient of `bce_loss(mlp_forward(..), label)` with respect to every weight.
pub fn mlp_backward(
    spec: &MlpSpec,
    weights: &[f64],
    input: &[f64],
    label: f64,
) -> Result<Vec<f64>> {
    spec.check(weights, input)?;
    let (activations, pre) = forward_trace(spec, weights, input);
    let p = sigmoid(pre.last().expect("at least one layer")[0]);
    let mut grad = vec![0.0; weights.len()];
    // The loss clamps p; outside the clamp it is flat.
    if !(LOSS_EPS..=1.0 - LOSS_EPS).contains(&p) {
        return Ok(grad);
    }
    let layers: Vec<_> = spec.layers().collect();
    let mut delta = vec![p - label];
    for l in (0..layers.len()).rev() {
        let (start, n_in, n_out) = layers[l];
        let x = &activations[l];
        for o in 0..n_out {
            for i in 0..n_in {
                grad[start + o * n_in + i] = delta[o] * x[i];
            }
            grad[start + n_in * n_out + o] = delta[o];
        }
        if l > 0 {
            let w = &weights[start..start + n_in * n_out];
            delta = (0..n_in)
                .map(|i| {
                    let back: f64 = (0..n_out).map(|o| w[o * n_in + i] * delta[o]).sum();
                    back * leaky_grad(pre[l - 1][i])
                })
                .collect();
        }
    }
    Ok(grad)
}

/// First/second-moment adaptive gradient descent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(n: usize) -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    pub fn steps(&self) -> i32 {
        self.t
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for (((p, g), m), v) in params
            .iter_mut()
            .zip(grad)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + self.eps);
        }
    }
}
