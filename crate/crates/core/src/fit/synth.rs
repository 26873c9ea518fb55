use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::problem::{Dataset, ResidualMode, SpectrumValues};
use crate::hybrid::HybridParams;
use crate::reflectance::{spectrum_2d, SusceptibilityModel};
use crate::{Error, Result};

/// Drive-frequency and detuning axes of a synthetic spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub f_d_axis: Vec<f64>,
    pub delta_axis: Vec<f64>,
}

/// Noisy synthetic spectrum from the closed-form model.
///
/// Complex mode adds independent N(0, σ²) noise to the real and imaginary parts; magnitude
/// mode adds it to |S₁₁|. The noise stream depends only on `seed`.
pub fn synthesize_spectrum(
    label: impl Into<String>,
    params: &HybridParams,
    model: SusceptibilityModel,
    grid: &Grid,
    noise_sigma: f64,
    mode: ResidualMode,
    seed: u64,
) -> Result<Dataset> {
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(Error::invalid("noise_sigma", "must be finite and ≥ 0"));
    }
    let clean = spectrum_2d(params, &grid.delta_axis, &grid.f_d_axis, model)?;
    if let Some(cell) = clean.failed.first() {
        return Err(Error::ModelEvaluation {
            dataset: "synthetic".into(),
            index: cell.delta_index * grid.f_d_axis.len() + cell.f_d_index,
            source: Box::new(Error::invalid("cell", cell.message.clone())),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise_sigma).map_err(|e| Error::invalid("noise_sigma", e.to_string()))?;
    let values = match mode {
        ResidualMode::Complex => SpectrumValues::Complex(
            clean
                .values
                .iter()
                .map(|s| {
                    let re = s.re + normal.sample(&mut rng);
                    let im = s.im + normal.sample(&mut rng);
                    num_complex::Complex64::new(re, im)
                })
                .collect(),
        ),
        ResidualMode::Magnitude => SpectrumValues::Magnitude(
            clean.values.iter().map(|s| s.norm() + normal.sample(&mut rng)).collect(),
        ),
    };
    Ok(Dataset {
        label: label.into(),
        f_d_axis: clean.f_d_axis,
        delta_axis: clean.delta_axis,
        values,
        sigma: None,
    })
}
