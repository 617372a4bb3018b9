//! Shower images: synthetic generation, CSV I/O and per-pixel statistics.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const N_PIXELS: usize = 8;
/// MeV
pub const PIXEL_MAX: f64 = 0.6;
/// GeV
pub const PRIMARY_ENERGY_RANGE: (f64, f64) = (225.0, 275.0);
/// GeV
pub const REFERENCE_PRIMARY_ENERGY: f64 = 250.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShowerImage {
    /// MeV
    pub pixels: [f64; N_PIXELS],
    /// GeV
    pub primary_energy: Option<f64>,
}

impl ShowerImage {
    pub fn new(pixels: [f64; N_PIXELS]) -> Self {
        Self {
            pixels,
            primary_energy: None,
        }
    }
}

/// Longitudinal profile used by the synthetic generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShowerProfile {
    /// Mean deposit per pixel at the reference primary energy, MeV.
    pub means: [f64; N_PIXELS],
    /// Gaussian fluctuation per pixel, MeV.
    pub stds: [f64; N_PIXELS],
    /// Primary energy draw range, GeV.
    pub energy_min: f64,
    pub energy_max: f64,
}

impl Default for ShowerProfile {
    fn default() -> Self {
        let means = [0.02, 0.10, 0.30, 0.48, 0.42, 0.22, 0.08, 0.02];
        let stds = means.map(|m| 0.15 * m + 0.005);
        Self {
            means,
            stds,
            energy_min: PRIMARY_ENERGY_RANGE.0,
            energy_max: PRIMARY_ENERGY_RANGE.1,
        }
    }
}

impl ShowerProfile {
    pub fn validate(&self) -> Result<()> {
        if self.means.iter().chain(&self.stds).any(|v| !(*v >= 0.0)) {
            return Err(Error::InvalidValue(
                "profile means and stds must be >= 0".into(),
            ));
        }
        if !(self.energy_min > 0.0 && self.energy_max >= self.energy_min) {
            return Err(Error::InvalidValue(format!(
                "primary energy range [{}, {}]",
                self.energy_min, self.energy_max
            )));
        }
        Ok(())
    }

    /// Expected mean of the primary-energy scale factor `E_p / 250`.
    pub fn mean_scale(&self) -> f64 {
        0.5 * (self.energy_min + self.energy_max) / REFERENCE_PRIMARY_ENERGY
    }
}

/// `n` synthetic images with the default profile.
pub fn synth_dataset(n: usize, seed: u64) -> Result<Vec<ShowerImage>> {
    synth_dataset_with(&ShowerProfile::default(), n, seed)
}

/// Per image: `E_p ~ U[energy_min, energy_max]`, `s = E_p / 250`,
/// `pixel_i = clamp(s * mean_i + N(0, std_i), 0, 0.6)`.
pub fn synth_dataset_with(
    profile: &ShowerProfile,
    n: usize,
    seed: u64,
) -> Result<Vec<ShowerImage>> {
    if n == 0 {
        return Err(Error::Empty("synthetic dataset size"));
    }
    profile.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let images = (0..n)
        .map(|_| {
            let primary = rng.random_range(profile.energy_min..=profile.energy_max);
            let scale = primary / REFERENCE_PRIMARY_ENERGY;
            let mut pixels = [0.0; N_PIXELS];
            for (i, p) in pixels.iter_mut().enumerate() {
                let z: f64 = rng.sample(StandardNormal);
                *p = (scale * profile.means[i] + profile.stds[i] * z).clamp(0.0, PIXEL_MAX);
            }
            ShowerImage {
                pixels,
                primary_energy: Some(primary),
            }
        })
        .collect();
    Ok(images)
}

/// Reads one image per row: 8 pixel energies in MeV and an optional 9th column with the
/// primary energy in GeV. A first row that does not parse as numbers is treated as a header.
pub fn load_csv(path: impl AsRef<Path>) -> Result<Vec<ShowerImage>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    let (images, clamped) = read_csv(file, path)?;
    if clamped > 0 {
        warn!(
            "{}: clamped {clamped} out-of-range pixel values",
            path.display()
        );
    }
    Ok(images)
}

/// Parses CSV from any reader. Returns the images and the number of clamped pixels.
pub fn read_csv<R: Read>(reader: R, path: &Path) -> Result<(Vec<ShowerImage>, usize)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let parse_err = |line: u64, message: String| Error::Parse {
        path: path.to_owned(),
        line,
        message,
    };

    let mut images = Vec::new();
    let mut clamped = 0;
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let line = record.position().map_or(row as u64 + 1, |p| p.line());
        let values: std::result::Result<Vec<f64>, _> =
            record.iter().map(str::parse::<f64>).collect();
        let values = match values {
            Ok(v) => v,
            Err(_) if row == 0 => continue,
            Err(e) => return Err(parse_err(line, format!("non-numeric field: {e}"))),
        };
        if values.len() != N_PIXELS && values.len() != N_PIXELS + 1 {
            return Err(parse_err(
                line,
                format!("expected 8 or 9 columns, found {}", values.len()),
            ));
        }
        let mut pixels = [0.0; N_PIXELS];
        for (p, &v) in pixels.iter_mut().zip(&values) {
            if !v.is_finite() {
                return Err(parse_err(line, format!("non-finite pixel value {v}")));
            }
            if !(0.0..=PIXEL_MAX).contains(&v) {
                clamped += 1;
            }
            *p = v.clamp(0.0, PIXEL_MAX);
        }
        images.push(ShowerImage {
            pixels,
            primary_energy: values.get(N_PIXELS).copied(),
        });
    }
    if images.is_empty() {
        return Err(Error::Empty("CSV contains no image rows"));
    }
    Ok((images, clamped))
}

pub fn write_csv<W: Write>(writer: W, images: &[ShowerImage]) -> Result<()> {
    let with_primary = images.iter().any(|im| im.primary_energy.is_some());
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = (0..N_PIXELS).map(|i| format!("e{i}")).collect();
    if with_primary {
        header.push("primary_energy".into());
    }
    wtr.write_record(&header)?;
    for image in images {
        let mut row: Vec<String> = image.pixels.iter().map(f64::to_string).collect();
        if with_primary {
            row.push(
                image
                    .primary_energy
                    .map_or_else(String::new, |e| e.to_string()),
            );
        }
        wtr.write_record(&row)?;
    }
    wtr.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

pub fn save_csv(path: impl AsRef<Path>, images: &[ShowerImage]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    write_csv(file, images)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub means: [f64; N_PIXELS],
    pub stds: [f64; N_PIXELS],
    pub n: usize,
}

/// Per-pixel sample mean and standard deviation (n - 1 denominator).
pub fn compute_stats(images: &[ShowerImage]) -> Result<DatasetStats> {
    let n = images.len();
    if n < 2 {
        return Err(Error::Empty("statistics need at least two images"));
    }
    let mut means = [0.0; N_PIXELS];
    for image in images {
        for (m, p) in means.iter_mut().zip(&image.pixels) {
            *m += p;
        }
    }
    means.iter_mut().for_each(|m| *m /= n as f64);
    // Corrected two-pass variance: the second sum cancels rounding error in the mean.
    let mut sq = [0.0; N_PIXELS];
    let mut lin = [0.0; N_PIXELS];
    for image in images {
        for i in 0..N_PIXELS {
            let d = image.pixels[i] - means[i];
            sq[i] += d * d;
            lin[i] += d;
        }
    }
    let mut stds = [0.0; N_PIXELS];
    for i in 0..N_PIXELS {
        let var = (sq[i] - lin[i] * lin[i] / n as f64) / (n - 1) as f64;
        stds[i] = var.max(0.0).sqrt();
    }
    Ok(DatasetStats { means, stds, n })
}
