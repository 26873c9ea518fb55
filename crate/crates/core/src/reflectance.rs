//! Input–output reflectance of the hybrid cavity and Lorentzian linewidth extraction.

use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fit::lm::{self, LmOptions};
use crate::hybrid::{qubit_frequency, HybridParams, OperatingPoint};
use crate::{Error, Result};

/// Qubit susceptibility entering the reflection coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SusceptibilityModel {
    /// Rotating-wave (co-rotating) term only.
    JaynesCummings,
    /// Co-rotating plus counter-rotating term.
    FullRabi,
    /// No qubit (g = 0).
    BareCavity,
}

/// χ for drive frequency `f_d`, qubit frequency `f_q`, decoherence `gamma_tot` and coupling `g`.
pub fn susceptibility(
    model: SusceptibilityModel,
    f_d: f64,
    f_q: f64,
    gamma_tot: f64,
    g: f64,
) -> Result<Complex64> {
    if model == SusceptibilityModel::BareCavity {
        return Ok(Complex64::new(0.0, 0.0));
    }
    if gamma_tot <= 0.0 {
        return Err(Error::ZeroDenominator("susceptibility (Γ_tot = 0)"));
    }
    Ok(susceptibility_unchecked(model, f_d, f_q, gamma_tot, g))
}

#[inline]
fn susceptibility_unchecked(model: SusceptibilityModel, f_d: f64, f_q: f64, gamma_tot: f64, g: f64) -> Complex64 {
    let co = Complex64::new(g, 0.0) / Complex64::new(-(f_d - f_q), -gamma_tot);
    match model {
        SusceptibilityModel::BareCavity => Complex64::new(0.0, 0.0),
        SusceptibilityModel::JaynesCummings => co,
        SusceptibilityModel::FullRabi => co + Complex64::new(g, 0.0) / Complex64::new(-(f_d + f_q), -gamma_tot),
    }
}

/// Cavity and qubit quantities for one detuning, so that a whole trace can be
/// evaluated without recomputing the mixing angle per drive frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityQubitPoint {
    pub f_c: f64,
    pub kappa_c: f64,
    pub kappa_i: f64,
    pub f_q: f64,
    pub g: f64,
    pub gamma_tot: f64,
}

impl CavityQubitPoint {
    pub fn new(params: &HybridParams, op: OperatingPoint, model: SusceptibilityModel) -> Result<Self> {
        let (g, gamma_tot) = if model == SusceptibilityModel::BareCavity {
            (0.0, 0.0)
        } else {
            let g = params.coupling_at(op)?;
            let gt = params.decoherence_rate(op)?;
            if gt <= 0.0 {
                return Err(Error::ZeroDenominator("susceptibility (Γ_tot = 0)"));
            }
            (g, gt)
        };
        Ok(Self {
            f_c: params.f_c,
            kappa_c: params.kappa_c,
            kappa_i: params.kappa_i,
            f_q: qubit_frequency(op.delta, params.t_c),
            g,
            gamma_tot,
        })
    }

    pub fn s11(&self, f_d: f64, model: SusceptibilityModel) -> Result<Complex64> {
        let g_chi = self.g * susceptibility_unchecked(model, f_d, self.f_q, self.gamma_tot, self.g);
        let delta_c = f_d - self.f_c;
        let num = Complex64::new(delta_c, 0.5 * (self.kappa_c - self.kappa_i)) + g_chi;
        let den = Complex64::new(delta_c, 0.5 * (self.kappa_c + self.kappa_i)) + g_chi;
        if den.norm() == 0.0 {
            return Err(Error::ZeroDenominator("reflection coefficient"));
        }
        Ok(num / den)
    }
}

/// Reflection coefficient S₁₁ at drive frequency `f_d`.
pub fn s11(f_d: f64, params: &HybridParams, op: OperatingPoint, model: SusceptibilityModel) -> Result<Complex64> {
    CavityQubitPoint::new(params, op, model)?.s11(f_d, model)
}

/// A cell of a spectrum grid that could not be evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellError {
    pub delta_index: usize,
    pub f_d_index: usize,
    pub message: String,
}

/// Complex S₁₁ over a (detuning, drive frequency) grid.
///
/// `values` is row-major with detuning as the outer index:
/// `values[i_delta * f_d_axis.len() + i_fd]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexSpectrum {
    pub f_d_axis: Vec<f64>,
    pub delta_axis: Vec<f64>,
    pub values: Vec<Complex64>,
    pub model: SusceptibilityModel,
    pub params: HybridParams,
    /// Cells that failed to evaluate; their values are NaN.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failed: Vec<CellError>,
}

impl ComplexSpectrum {
    pub fn get(&self, i_delta: usize, i_fd: usize) -> Complex64 {
        self.values[i_delta * self.f_d_axis.len() + i_fd]
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    /// One detuning row.
    pub fn row(&self, i_delta: usize) -> &[Complex64] {
        let n = self.f_d_axis.len();
        &self.values[i_delta * n..(i_delta + 1) * n]
    }
}

pub(crate) fn check_axis(name: &str, axis: &[f64]) -> Result<()> {
    if axis.is_empty() {
        return Err(Error::invalid(name, "axis is empty"));
    }
    if axis.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(name, "axis contains non-finite values"));
    }
    if axis.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid(name, "axis must be strictly increasing"));
    }
    Ok(())
}

/// Evenly spaced axis including both end points.
pub fn linspace(start: f64, stop: f64, points: usize) -> Vec<f64> {
    match points {
        0 => vec![],
        1 => vec![start],
        _ => {
            let step = (stop - start) / (points - 1) as f64;
            (0..points).map(|i| start + step * i as f64).collect()
        }
    }
}

/// Evaluates S₁₁ on the full grid. Rows are computed independently (in parallel);
/// the result does not depend on how the rows are scheduled.
pub fn spectrum_2d(
    params: &HybridParams,
    delta_axis: &[f64],
    f_d_axis: &[f64],
    model: SusceptibilityModel,
) -> Result<ComplexSpectrum> {
    params.validate()?;
    check_axis("delta_axis", delta_axis)?;
    check_axis("f_d_axis", f_d_axis)?;

    let rows: Vec<(Vec<Complex64>, Vec<CellError>)> = delta_axis
        .par_iter()
        .enumerate()
        .map(|(i, &delta)| {
            let nan = Complex64::new(f64::NAN, f64::NAN);
            let mut errors = Vec::new();
            let point = CavityQubitPoint::new(params, OperatingPoint::new(delta), model);
            let row = f_d_axis
                .iter()
                .enumerate()
                .map(|(j, &f_d)| match point.as_ref().map_err(Clone::clone).and_then(|p| p.s11(f_d, model)) {
                    Ok(v) => v,
                    Err(e) => {
                        errors.push(CellError {
                            delta_index: i,
                            f_d_index: j,
                            message: e.to_string(),
                        });
                        nan
                    }
                })
                .collect();
            (row, errors)
        })
        .collect();

    let mut values = Vec::with_capacity(delta_axis.len() * f_d_axis.len());
    let mut failed = Vec::new();
    for (row, errs) in rows {
        values.extend(row);
        failed.extend(errs);
    }
    Ok(ComplexSpectrum {
        f_d_axis: f_d_axis.to_vec(),
        delta_axis: delta_axis.to_vec(),
        values,
        model,
        params: *params,
        failed,
    })
}

/// Lorentzian fitted to a single trace: `offset + amplitude / (1 + (2(f − center)/fwhm)²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzianFit {
    pub center: f64,
    pub fwhm: f64,
    pub offset: f64,
    pub amplitude: f64,
    pub residual_norm: f64,
}

pub fn lorentzian(f: f64, center: f64, fwhm: f64, offset: f64, amplitude: f64) -> f64 {
    let x = 2.0 * (f - center) / fwhm;
    offset + amplitude / (1.0 + x * x)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Fits a Lorentzian (dip or peak) to `trace` sampled at `f_axis`.
///
/// Works on |S₁₁|² dips and on photocurrent peaks alike; the caller obtains the
/// DQD absorption rate as `fwhm − κ`.
pub fn absorption_linewidth(f_axis: &[f64], trace: &[f64]) -> Result<LorentzianFit> {
    if f_axis.len() != trace.len() {
        return Err(Error::invalid("trace", "frequency axis and trace lengths differ"));
    }
    if f_axis.len() < 5 {
        return Err(Error::invalid("trace", "need at least 5 points"));
    }
    check_axis("f_axis", f_axis)?;
    if trace.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("trace", "contains non-finite values"));
    }

    let n = trace.len();
    let edge = (n / 10).max(1);
    let edges: Vec<f64> = trace[..edge].iter().chain(&trace[n - edge..]).copied().collect();
    let offset0 = median(edges);
    let (i_min, &v_min) = trace
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    let (i_max, &v_max) = trace
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    let scale = v_max.abs().max(v_min.abs()).max(f64::MIN_POSITIVE);
    if (v_max - v_min) <= 1e-9 * scale {
        return Err(Error::NoResonance);
    }
    let is_dip = (offset0 - v_min) >= (v_max - offset0);
    let (i_ext, v_ext) = if is_dip { (i_min, v_min) } else { (i_max, v_max) };
    let amp0 = v_ext - offset0;
    let half = offset0 + 0.5 * amp0;
    let crosses = |v: f64| if is_dip { v > half } else { v < half };
    let mut lo = i_ext;
    while lo > 0 && !crosses(trace[lo]) {
        lo -= 1;
    }
    let mut hi = i_ext;
    while hi < n - 1 && !crosses(trace[hi]) {
        hi += 1;
    }
    let span = f_axis[n - 1] - f_axis[0];
    let min_step = f_axis.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let fwhm0 = (f_axis[hi] - f_axis[lo]).max(min_step);

    // x = (center, ln fwhm, offset, amplitude), all rescaled to O(1).
    let f_scale = span;
    let y_scale = (v_max - v_min).abs();
    let residual = |x: &DVector<f64>| -> Result<DVector<f64>> {
        let center = f_axis[0] + x[0] * f_scale;
        let fwhm = x[1].exp() * f_scale;
        let offset = x[2] * y_scale;
        let amp = x[3] * y_scale;
        Ok(DVector::from_iterator(
            n,
            f_axis
                .iter()
                .zip(trace)
                .map(|(&f, &y)| (lorentzian(f, center, fwhm, offset, amp) - y) / y_scale),
        ))
    };
    let x0 = DVector::from_vec(vec![
        (f_axis[i_ext] - f_axis[0]) / f_scale,
        (fwhm0 / f_scale).ln(),
        offset0 / y_scale,
        amp0 / y_scale,
    ]);
    let lower = [-1.0, (min_step / f_scale * 1e-3).ln(), -1e6, -1e6];
    let upper = [2.0, (100.0f64).ln(), 1e6, 1e6];
    let rep = lm::minimize(residual, x0, &lower, &upper, &LmOptions::default())?;
    let residual_norm = rep.residuals.norm() * y_scale;
    if !rep.termination.converged() {
        return Err(Error::NotConverged {
            reason: "Lorentzian fit hit the iteration limit".into(),
            residual_norm,
        });
    }
    let fit = LorentzianFit {
        center: f_axis[0] + rep.x[0] * f_scale,
        fwhm: rep.x[1].exp() * f_scale,
        offset: rep.x[2] * y_scale,
        amplitude: rep.x[3] * y_scale,
        residual_norm,
    };
    if fit.center < f_axis[0] || fit.center > f_axis[n - 1] || fit.fwhm > 10.0 * span {
        return Err(Error::NotConverged {
            reason: format!(
                "Lorentzian centre {:.6e} Hz / width {:.6e} Hz outside the sampled window",
                fit.center, fit.fwhm
            ),
            residual_norm,
        });
    }
    Ok(fit)
}
