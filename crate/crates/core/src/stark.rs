//! ac-Stark-shift power calibration.
//!
//! The qubit frequency at zero detuning shifts by Δν = 2·n_c·χ with the intracavity
//! photon number n_c set by the power reaching the feedline, P_d = β·P_VNA. Fitting
//! Δν against P_VNA therefore yields the line attenuation β.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::constants::{PLANCK, TWO_PI};
use crate::efficiency::photon_flux;
use crate::{Error, Result};

/// Dispersive shift χ = g²/(f_q − f_c), signed.
pub fn dispersive_shift(g: f64, f_q: f64, f_c: f64) -> Result<f64> {
    let detuning = f_q - f_c;
    if detuning == 0.0 {
        return Err(Error::DispersiveDegenerate);
    }
    Ok(g * g / detuning)
}

/// Whether |f_q − f_c| ≥ 10·g, the regime where the dispersive expansion is trusted.
pub fn is_dispersive(g: f64, f_q: f64, f_c: f64) -> bool {
    (f_q - f_c).abs() >= 10.0 * g.abs()
}

/// Δν = 2·n_c·χ.
pub fn stark_shift(n_c: f64, g: f64, f_q: f64, f_c: f64) -> Result<f64> {
    Ok(2.0 * n_c * dispersive_shift(g, f_q, f_c)?)
}

/// Mean intracavity photon number for power `p_d` at the feedline:
/// n_c = 4·(2πκ_c)·Ṅ/(2πκ)² with Ṅ = P_d/(h·f_c).
pub fn photon_number(p_d: f64, f_c: f64, kappa_c: f64, kappa: f64) -> Result<f64> {
    if !(f_c > 0.0 && kappa > 0.0 && kappa_c >= 0.0 && p_d >= 0.0) {
        return Err(Error::invalid("photon_number", "needs P_d ≥ 0, f_c > 0, κ_c ≥ 0, κ > 0"));
    }
    let k = TWO_PI * kappa;
    Ok(4.0 * TWO_PI * kappa_c * photon_flux(p_d, f_c) / (k * k))
}

/// Cavity and qubit parameters the calibration is referred to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StarkContext {
    /// Coupling at zero detuning.
    #[serde(rename = "g_hz")]
    pub g: f64,
    #[serde(rename = "f_c_hz")]
    pub f_c: f64,
    #[serde(rename = "kappa_c_hz")]
    pub kappa_c: f64,
    #[serde(rename = "kappa_hz")]
    pub kappa: f64,
    /// Qubit frequency at negligible power.
    #[serde(rename = "f_q0_hz")]
    pub f_q0: f64,
}

impl StarkContext {
    /// The 3644 MHz column of the input-loss characterisation (f_q0 = 2t_c at δ = 0).
    pub fn table2_3644() -> Self {
        Self {
            g: 108.9e6,
            f_c: 3.644e9,
            kappa_c: 22.2e6,
            kappa: 26.4e6,
            f_q0: 2.0 * 1073.1e6,
        }
    }

    pub fn chi(&self) -> Result<f64> {
        dispersive_shift(self.g, self.f_q0, self.f_c)
    }

    /// dΔν/dP_d, the shift per watt at the feedline.
    pub fn shift_per_watt(&self) -> Result<f64> {
        Ok(2.0 * self.chi()? * photon_number(1.0, self.f_c, self.kappa_c, self.kappa)?)
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("g_hz", self.g),
            ("f_c_hz", self.f_c),
            ("kappa_c_hz", self.kappa_c),
            ("kappa_hz", self.kappa),
            ("f_q0_hz", self.f_q0),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, "must be positive"));
            }
        }
        if self.kappa_c > self.kappa {
            return Err(Error::invalid("kappa_c_hz", "cannot exceed kappa_hz"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StarkPoint {
    #[serde(rename = "p_vna_watt")]
    pub p_vna: f64,
    #[serde(rename = "f_q_hz")]
    pub f_q: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StarkDataset {
    pub points: Vec<StarkPoint>,
    pub context: StarkContext,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CalibrationOptions {
    /// Fit Δν = a + s·P instead of Δν = s·P. Diagnostic only.
    pub free_intercept: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    /// P_d/P_VNA.
    pub beta: f64,
    pub beta_sigma: f64,
    /// Fitted dΔν/dP_VNA in Hz/W.
    pub slope: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intercept: Option<f64>,
    pub residual_norm: f64,
    pub chi: f64,
    pub warnings: Vec<String>,
}

/// Least-squares β from a power sweep of the qubit frequency.
pub fn fit_beta(dataset: &StarkDataset) -> Result<CalibrationResult> {
    fit_beta_with(dataset, CalibrationOptions::default())
}

pub fn fit_beta_with(dataset: &StarkDataset, options: CalibrationOptions) -> Result<CalibrationResult> {
    let ctx = &dataset.context;
    ctx.validate()?;
    let pts = &dataset.points;
    if pts.len() < 2 {
        return Err(Error::DegenerateData("need at least two power points".into()));
    }
    if pts.iter().any(|p| !(p.p_vna >= 0.0 && p.p_vna.is_finite() && p.f_q.is_finite())) {
        return Err(Error::DegenerateData("powers must be finite and ≥ 0, frequencies finite".into()));
    }
    if pts.iter().all(|p| p.p_vna == pts[0].p_vna) {
        return Err(Error::DegenerateData("all P_VNA values are equal".into()));
    }
    let chi = ctx.chi()?;
    let mut warnings = Vec::new();
    if !is_dispersive(ctx.g, ctx.f_q0, ctx.f_c) {
        warnings.push(format!(
            "|f_q0 − f_c| = {:.4e} Hz is below 10·g = {:.4e} Hz; dispersive shift may be inaccurate",
            (ctx.f_q0 - ctx.f_c).abs(),
            10.0 * ctx.g
        ));
    }

    let n = pts.len() as f64;
    let x: Vec<f64> = pts.iter().map(|p| p.p_vna).collect();
    let y: Vec<f64> = pts.iter().map(|p| p.f_q - ctx.f_q0).collect();
    let (slope, intercept, slope_var, residual_norm) = if options.free_intercept {
        if pts.len() < 3 {
            return Err(Error::DegenerateData("free intercept needs at least three points".into()));
        }
        let mx = x.iter().sum::<f64>() / n;
        let my = y.iter().sum::<f64>() / n;
        let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
        let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let s = sxy / sxx;
        let a = my - s * mx;
        let rss: f64 = x.iter().zip(&y).map(|(xi, yi)| (yi - a - s * xi).powi(2)).sum();
        (s, Some(a), rss / (n - 2.0) / sxx, rss.sqrt())
    } else {
        let sxx: f64 = x.iter().map(|v| v * v).sum();
        let s = x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() / sxx;
        let rss: f64 = x.iter().zip(&y).map(|(xi, yi)| (yi - s * xi).powi(2)).sum();
        (s, None, rss / (n - 1.0) / sxx, rss.sqrt())
    };
    if slope * chi <= 0.0 {
        return Err(Error::InconsistentDispersiveSign { slope, chi });
    }
    let k = TWO_PI * ctx.kappa;
    let beta = slope * k * k * PLANCK * ctx.f_c / (2.0 * chi * 4.0 * TWO_PI * ctx.kappa_c);
    Ok(CalibrationResult {
        beta,
        beta_sigma: beta.abs() * slope_var.sqrt() / slope.abs(),
        slope,
        intercept,
        residual_norm,
        chi,
        warnings,
    })
}

/// Power sweep generated from a known β, with optional Gaussian noise of relative
/// standard deviation `rel_noise` on each shift.
pub fn synthesize_stark(
    beta: f64,
    context: StarkContext,
    powers: &[f64],
    rel_noise: f64,
    seed: u64,
) -> Result<StarkDataset> {
    context.validate()?;
    if !(rel_noise >= 0.0 && rel_noise.is_finite()) {
        return Err(Error::invalid("rel_noise", "must be ≥ 0"));
    }
    let chi = context.chi()?;
    let normal = Normal::new(0.0, rel_noise).map_err(|e| Error::invalid("rel_noise", e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = powers
        .iter()
        .map(|&p| {
            let n_c = photon_number(beta * p, context.f_c, context.kappa_c, context.kappa)?;
            let shift = 2.0 * n_c * chi;
            Ok(StarkPoint {
                p_vna: p,
                f_q: context.f_q0 + shift * (1.0 + normal.sample(&mut rng)),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StarkDataset { points, context })
}
