//! Average-image MSE and statistics over repeated training trials.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::data::{ShowerImage, N_PIXELS};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MseResult {
    /// Mean of the per-pixel squared errors, MeV^2.
    pub mse: f64,
    /// Sample std of the per-pixel squared errors, MeV^2.
    pub std: f64,
}

pub fn average_image(images: &[ShowerImage]) -> Result<[f64; N_PIXELS]> {
    if images.is_empty() {
        return Err(Error::Empty("average of no images"));
    }
    let mut mean = [0.0; N_PIXELS];
    for image in images {
        for (m, p) in mean.iter_mut().zip(&image.pixels) {
            *m += p;
        }
    }
    let n = images.len() as f64;
    Ok(mean.map(|m| m / n))
}

/// Squared difference of the two average images, pixel by pixel.
pub fn pixel_squared_errors(
    generated: &[ShowerImage],
    reference: &[ShowerImage],
) -> Result<[f64; N_PIXELS]> {
    let gen = average_image(generated)?;
    let reference = average_image(reference)?;
    let mut d = [0.0; N_PIXELS];
    for i in 0..N_PIXELS {
        d[i] = (gen[i] - reference[i]).powi(2);
    }
    Ok(d)
}

pub fn mse_between(generated: &[ShowerImage], reference: &[ShowerImage]) -> Result<MseResult> {
    let d = pixel_squared_errors(generated, reference)?;
    let (mse, std) = mean_and_sample_std(&d);
    Ok(MseResult { mse, std })
}

fn mean_and_sample_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialStats {
    pub curves: Vec<Vec<MseResult>>,
    pub mean_curve: Vec<f64>,
    pub std_band: Vec<f64>,
    pub best_trial: usize,
}

impl TrialStats {
    pub fn n_epochs(&self) -> usize {
        self.mean_curve.len()
    }

    pub fn final_mean(&self) -> f64 {
        *self
            .mean_curve
            .last()
            .expect("aggregate has at least one epoch")
    }

    pub fn final_std(&self) -> f64 {
        *self
            .std_band
            .last()
            .expect("aggregate has at least one epoch")
    }

    pub fn best_curve(&self) -> &[MseResult] {
        &self.curves[self.best_trial]
    }

    /// Columns: `epoch,mean,std,best`, epochs counted from 1.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["epoch", "mean", "std", "best"])?;
        for (e, ((mean, std), best)) in self
            .mean_curve
            .iter()
            .zip(&self.std_band)
            .zip(self.best_curve())
            .enumerate()
        {
            wtr.write_record(&[
                (e + 1).to_string(),
                mean.to_string(),
                std.to_string(),
                best.mse.to_string(),
            ])?;
        }
        wtr.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }
}

/// Per-epoch mean and sample std of the MSE across trials. The best trial has the lowest
/// final-epoch MSE; ties go to the lower index.
pub fn aggregate_trials(curves: Vec<Vec<MseResult>>) -> Result<TrialStats> {
    let first = curves.first().ok_or(Error::Empty("no trial curves"))?;
    let n_epochs = first.len();
    if n_epochs == 0 {
        return Err(Error::Empty("trial curve has no epochs"));
    }
    if let Some((trial, c)) = curves.iter().enumerate().find(|(_, c)| c.len() != n_epochs) {
        return Err(Error::RaggedCurves {
            trial,
            expected: n_epochs,
            got: c.len(),
        });
    }
    let mut mean_curve = Vec::with_capacity(n_epochs);
    let mut std_band = Vec::with_capacity(n_epochs);
    let mut column = Vec::with_capacity(curves.len());
    for e in 0..n_epochs {
        column.clear();
        column.extend(curves.iter().map(|c| c[e].mse));
        let (mean, std) = mean_and_sample_std(&column);
        mean_curve.push(mean);
        std_band.push(std);
    }
    let mut best_trial = 0;
    for (i, c) in curves.iter().enumerate() {
        if c[n_epochs - 1].mse < curves[best_trial][n_epochs - 1].mse {
            best_trial = i;
        }
    }
    Ok(TrialStats {
        curves,
        mean_curve,
        std_band,
        best_trial,
    })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn img(p: [f64; 8]) -> ShowerImage {
        ShowerImage::new(p)
    }

    fn flat(v: f64, n: usize) -> Vec<MseResult> {
        vec![MseResult { mse: v, std: 0.0 }; n]
    }

    #[test]
    fn average_basics() {
        let a = img([0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.0, 0.05]);
        assert_eq!(average_image(&[a]).unwrap(), a.pixels);
        let b = img(a.pixels.map(|p| 0.6 - p));
        for m in average_image(&[a, b]).unwrap() {
            assert!((m - 0.3).abs() < 1e-15);
        }
        assert!(average_image(&[]).is_err());
    }

    #[test]
    fn mse_cases() {
        let a = img([0.1; 8]);
        assert_eq!(
            mse_between(&[a], &[a]).unwrap(),
            MseResult { mse: 0.0, std: 0.0 }
        );

        let b = img([0.2; 8]);
        let r = mse_between(&[a], &[b]).unwrap();
        assert!((r.mse - 0.01).abs() < 1e-15);
        assert!(r.std < 1e-15);

        let mut c = a;
        c.pixels[0] += 0.2;
        let r = mse_between(&[c], &[a]).unwrap();
        assert!((r.mse - 0.005).abs() < 1e-15);
        assert!(mse_between(&[], &[a]).is_err());
    }

    #[test]
    fn aggregate_single_and_pair() {
        let one = aggregate_trials(vec![flat(1.5, 4)]).unwrap();
        assert_eq!(one.mean_curve, vec![1.5; 4]);
        assert_eq!(one.std_band, vec![0.0; 4]);

        let two = aggregate_trials(vec![flat(1.0, 3), flat(3.0, 3)]).unwrap();
        for (m, s) in two.mean_curve.iter().zip(&two.std_band) {
            assert_eq!(*m, 2.0);
            assert!((s - 2f64.sqrt()).abs() < 1e-15);
        }
        assert_eq!(two.best_trial, 0);
    }

    #[test]
    fn aggregate_tie_prefers_lower_index() {
        let stats = aggregate_trials(vec![flat(2.0, 2), flat(1.0, 2), flat(1.0, 2)]).unwrap();
        assert_eq!(stats.best_trial, 1);
    }

    #[test]
    fn aggregate_rejects_ragged_and_empty() {
        assert!(matches!(
            aggregate_trials(vec![flat(1.0, 3), flat(1.0, 2)]),
            Err(Error::RaggedCurves {
                trial: 1,
                expected: 3,
                got: 2
            })
        ));
        assert!(aggregate_trials(vec![]).is_err());
    }

    fn image_strategy() -> impl Strategy<Value = ShowerImage> {
        prop::array::uniform8(0.0f64..0.6).prop_map(ShowerImage::new)
    }

    proptest! {
        #[test]
        fn mse_symmetric(
            gen in prop::collection::vec(image_strategy(), 1..6),
            reference in prop::collection::vec(image_strategy(), 1..6),
        ) {
            let ab = mse_between(&gen, &reference).unwrap();
            let ba = mse_between(&reference, &gen).unwrap();
            prop_assert!((ab.mse - ba.mse).abs() <= 1e-15);
            prop_assert!((ab.std - ba.std).abs() <= 1e-15);
        }

        #[test]
        fn mse_scales_quadratically(
            gen in prop::collection::vec(image_strategy(), 1..6),
            reference in prop::collection::vec(image_strategy(), 1..6),
            k in 0.1f64..3.0,
        ) {
            let scale = |v: &[ShowerImage]| -> Vec<ShowerImage> {
                v.iter().map(|im| ShowerImage::new(im.pixels.map(|p| p * k))).collect()
            };
            let base = mse_between(&gen, &reference).unwrap();
            let scaled = mse_between(&scale(&gen), &scale(&reference)).unwrap();
            prop_assert!((scaled.mse - k * k * base.mse).abs() <= 1e-12 * (1.0 + base.mse));
        }

        #[test]
        fn identical_curves_have_zero_band(values in prop::collection::vec(0.0f64..1.0, 1..20), n in 1usize..5) {
            let curve: Vec<MseResult> = values.iter().map(|&mse| MseResult { mse, std: 0.0 }).collect();
            let stats = aggregate_trials(vec![curve; n]).unwrap();
            for (m, v) in stats.mean_curve.iter().zip(&values) {
                prop_assert!((m - v).abs() <= 1e-15);
            }
            prop_assert!(stats.std_band.iter().all(|s| *s <= 1e-15));
        }
    }
}
