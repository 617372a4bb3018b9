//! Simultaneous perturbation stochastic approximation.
//!
//! One step perturbs every coordinate at once along a Rademacher direction `delta`,
//! evaluates the loss at `p + c_k delta` and `p - c_k delta`, and forms
//! `g_j = (L+ - L-) / (2 c_k delta_j)` with `c_k = c0 / (k + 1)^gamma`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpsaConfig {
    pub c0: f64,
    pub gamma: f64,
}

impl Default for SpsaConfig {
    fn default() -> Self {
        Self {
            c0: 0.1,
            gamma: 0.101,
        }
    }
}

impl SpsaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c0 > 0.0) || !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::InvalidValue(format!(
                "SPSA c0 = {}, gamma = {}",
                self.c0, self.gamma
            )));
        }
        Ok(())
    }

    pub fn perturbation(&self, k: usize) -> f64 {
        self.c0 / ((k + 1) as f64).powf(self.gamma)
    }
}

/// Exactly two loss evaluations; the gain `lr` is applied as given.
pub fn spsa_step<F, R>(
    mut loss: F,
    params: &[f64],
    lr: f64,
    cfg: &SpsaConfig,
    k: usize,
    rng: &mut R,
) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> f64,
    R: Rng + ?Sized,
{
    if !(lr > 0.0) {
        return Err(Error::InvalidValue(format!("SPSA gain {lr} must be > 0")));
    }
    let ck = cfg.perturbation(k);
    let delta: Vec<f64> = (0..params.len())
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect();
    let shifted = |sign: f64| -> Vec<f64> {
        params
            .iter()
            .zip(&delta)
            .map(|(p, d)| p + sign * ck * d)
            .collect()
    };
    let plus = loss(&shifted(1.0));
    let minus = loss(&shifted(-1.0));
    if !plus.is_finite() || !minus.is_finite() {
        return Err(Error::NonFiniteLoss {
            iteration: k,
            context: "SPSA loss evaluation",
        });
    }
    let diff = (plus - minus) / (2.0 * ck);
    Ok(params
        .iter()
        .zip(&delta)
        .map(|(p, d)| p - lr * diff / d)
        .collect())
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn sphere(p: &[f64]) -> f64 {
        p.iter().map(|x| x * x).sum()
    }

    #[test]
    fn converges_on_quadratic_bowl() {
        let cfg = SpsaConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut p = vec![1.0, 1.0];
        for k in 0..500 {
            p = spsa_step(sphere, &p, 0.1, &cfg, k, &mut rng).unwrap();
        }
        assert!(sphere(&p).sqrt() < 0.05, "{p:?}");
    }

    #[test]
    fn constant_loss_leaves_params() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = vec![0.3, -0.2, 1.5];
        let next = spsa_step(|_| 4.2, &p, 0.5, &SpsaConfig::default(), 0, &mut rng).unwrap();
        assert_eq!(next, p);
    }

    #[test]
    fn one_dimension_is_central_difference() {
        let cfg = SpsaConfig::default();
        let f = |p: &[f64]| (p[0] - 0.4).powi(3);
        for seed in 0..8 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let k = 4;
            let c = cfg.perturbation(k);
            let x = 1.3;
            let fd = (f(&[x + c]) - f(&[x - c])) / (2.0 * c);
            let next = spsa_step(f, &[x], 0.01, &cfg, k, &mut rng).unwrap();
            assert!((next[0] - (x - 0.01 * fd)).abs() < 1e-15);
        }
    }

    #[test]
    fn exactly_two_evaluations() {
        let mut calls = 0;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        spsa_step(
            |p: &[f64]| {
                calls += 1;
                sphere(p)
            },
            &[1.0; 20],
            0.1,
            &SpsaConfig::default(),
            0,
            &mut rng,
        )
        .unwrap();
        assert_eq!(calls, 2);
    }

    #[test]
    fn non_finite_loss_aborts() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = spsa_step(
            |_| f64::NAN,
            &[0.0],
            0.1,
            &SpsaConfig::default(),
            7,
            &mut rng,
        );
        assert!(matches!(
            err,
            Err(Error::NonFiniteLoss { iteration: 7, .. })
        ));
        assert!(spsa_step(sphere, &[0.0], 0.0, &SpsaConfig::default(), 0, &mut rng).is_err());
    }
}
