use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::lm::LmOptions;
use super::problem::{
    Dataset, FitModelSpec, FitProblem, FitResult, InitValue, ParamName, ParamRole, ParamSpec, ResidualMode,
    SpectrumValues, Transform,
};
use crate::reflectance::{check_axis, SusceptibilityModel};
use crate::{Error, Result};

/// A single reflection trace versus drive frequency.
#[derive(Debug, Clone, PartialEq)]
pub enum Trace {
    Complex(Vec<Complex64>),
    Magnitude(Vec<f64>),
}

impl Trace {
    fn len(&self) -> usize {
        match self {
            Trace::Complex(v) => v.len(),
            Trace::Magnitude(v) => v.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BareCavityFit {
    pub f_c: f64,
    pub kappa_c: f64,
    pub kappa_i: f64,
    /// κ_c/κ; above one half the cavity is overcoupled.
    pub coupling_ratio: f64,
    pub overcoupled: bool,
    /// Magnitude data cannot tell κ_c from κ_i; the overcoupled branch is reported.
    pub regime_ambiguous: bool,
    /// κ_i ran into its lower bound, so only an upper limit is meaningful.
    pub kappa_i_at_bound: bool,
    pub fit: FitResult,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Full width at half maximum of a non-negative peak at `peak`, by linear interpolation.
fn half_max_width(f: &[f64], y: &[f64], peak: usize) -> f64 {
    let half = 0.5 * y[peak];
    let cross = |range: &mut dyn Iterator<Item = usize>, step: isize| -> Option<f64> {
        for i in range {
            let j = (i as isize - step) as usize;
            if y[i] < half {
                let t = (y[j] - half) / (y[j] - y[i]);
                return Some(f[j] + t * (f[i] - f[j]));
            }
        }
        None
    };
    let left = cross(&mut (0..peak).rev(), -1);
    let right = cross(&mut (peak + 1..f.len()), 1);
    let span = f[f.len() - 1] - f[0];
    match (left, right) {
        (Some(l), Some(r)) => r - l,
        (Some(l), None) => 2.0 * (f[peak] - l),
        (None, Some(r)) => 2.0 * (r - f[peak]),
        (None, None) => span / 2.0,
    }
    .max(span / (4.0 * f.len() as f64))
}

/// Extracts f_c, κ_c and κ_i from a bare-cavity reflection trace (g = 0 limit of the
/// input–output model) with a background amplitude nuisance, plus a phase nuisance for
/// complex traces.
pub fn fit_bare_cavity(f_d_axis: &[f64], trace: &Trace) -> Result<BareCavityFit> {
    check_axis("f_d_axis", f_d_axis)?;
    let n = f_d_axis.len();
    if trace.len() != n {
        return Err(Error::invalid("trace", "length does not match f_d_axis"));
    }
    if n < 5 {
        return Err(Error::DegenerateData("a bare-cavity fit needs at least 5 points".into()));
    }
    let edge = (n / 10).max(2);
    let edge_idx: Vec<usize> = (0..edge).chain(n - edge..n).collect();

    let (mode, amp0, phase0, normalized): (ResidualMode, f64, f64, Vec<Complex64>) = match trace {
        Trace::Complex(v) => {
            if v.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                return Err(Error::DegenerateData("trace contains non-finite values".into()));
            }
            let bg: Complex64 = edge_idx.iter().map(|&i| v[i]).sum::<Complex64>() / edge_idx.len() as f64;
            let (a, phi) = bg.to_polar();
            let rot = Complex64::from_polar(1.0 / a, -phi);
            (ResidualMode::Complex, a, phi, v.iter().map(|z| z * rot).collect())
        }
        Trace::Magnitude(v) => {
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::DegenerateData("trace contains non-finite values".into()));
            }
            let a = median(edge_idx.iter().map(|&i| v[i]).collect());
            (ResidualMode::Magnitude, a, 0.0, v.iter().map(|x| Complex64::new(x / a, 0.0)).collect())
        }
    };
    if !(amp0 > 0.0) {
        return Err(Error::DegenerateData("background amplitude is zero".into()));
    }

    // Both |S − 1|² and 1 − |S|² are Lorentzians of full width κ centred on f_c.
    let peak_curve: Vec<f64> = match mode {
        ResidualMode::Complex => normalized.iter().map(|z| (z - 1.0).norm_sqr()).collect(),
        ResidualMode::Magnitude => normalized.iter().map(|z| (1.0 - z.norm_sqr()).max(0.0)).collect(),
    };
    let i_res = (0..n).max_by(|&a, &b| peak_curve[a].total_cmp(&peak_curve[b])).unwrap();
    if peak_curve[i_res] < 1e-9 {
        return Err(match mode {
            ResidualMode::Complex => Error::NoResonance,
            ResidualMode::Magnitude => Error::Unidentifiable(
                "|S11| is flat: no dip in the window, or a lossless cavity whose κ_c/κ_i split does not show in magnitude"
                    .into(),
            ),
        });
    }
    let kappa0 = half_max_width(f_d_axis, &peak_curve, i_res);
    let depth = match mode {
        ResidualMode::Complex => normalized[i_res].re.clamp(-0.98, 0.98),
        ResidualMode::Magnitude => normalized[i_res].norm().clamp(0.02, 0.98),
    };
    let f_c0 = f_d_axis[i_res];
    let kc0 = kappa0 * (1.0 + depth) / 2.0;
    let ki0 = kappa0 * (1.0 - depth) / 2.0;

    let span = f_d_axis[n - 1] - f_d_axis[0];
    let k_lo = kappa0 * 1e-6;
    let k_hi = (span * 10.0).max(kappa0 * 10.0);
    let mut parameters = vec![
        ParamSpec::new(ParamName::CavityFrequency, ParamRole::PerDataset, f_d_axis[0], f_d_axis[n - 1], Transform::Linear),
        ParamSpec::new(ParamName::KappaC, ParamRole::PerDataset, k_lo, k_hi, Transform::Log),
        ParamSpec::new(ParamName::KappaI, ParamRole::PerDataset, k_lo, k_hi, Transform::Log),
        ParamSpec::new(ParamName::Amplitude, ParamRole::Nuisance, amp0 * 0.1, amp0 * 10.0, Transform::Linear),
    ];
    let mut init: BTreeMap<ParamName, InitValue> = BTreeMap::from([
        (ParamName::CavityFrequency, InitValue::Scalar(f_c0)),
        (ParamName::KappaC, InitValue::Scalar(kc0.clamp(k_lo, k_hi))),
        (ParamName::KappaI, InitValue::Scalar(ki0.clamp(k_lo, k_hi))),
        (ParamName::Amplitude, InitValue::Scalar(amp0)),
    ]);
    if mode == ResidualMode::Complex {
        parameters.push(ParamSpec::new(
            ParamName::Phase,
            ParamRole::Nuisance,
            phase0 - std::f64::consts::PI,
            phase0 + std::f64::consts::PI,
            Transform::Linear,
        ));
        init.insert(ParamName::Phase, InitValue::Scalar(phase0));
    }

    let spec = FitModelSpec {
        model: SusceptibilityModel::BareCavity,
        residual_mode: mode,
        parameters,
    };
    let dataset = Dataset {
        label: "trace".into(),
        f_d_axis: f_d_axis.to_vec(),
        delta_axis: vec![0.0],
        values: match trace {
            Trace::Complex(v) => SpectrumValues::Complex(v.clone()),
            Trace::Magnitude(v) => SpectrumValues::Magnitude(v.clone()),
        },
        sigma: None,
    };
    let problem = FitProblem::new(spec, vec![dataset], &init)?;
    let options = LmOptions {
        max_iter: 500,
        ftol: 1e-15,
        xtol: 1e-15,
        ..LmOptions::default()
    };
    let fit = problem.fit(&options)?;
    let get = |p| fit.value(p, Some("trace")).unwrap();
    let (mut kappa_c, mut kappa_i) = (get(ParamName::KappaC), get(ParamName::KappaI));
    let regime_ambiguous = mode == ResidualMode::Magnitude;
    if regime_ambiguous && kappa_i > kappa_c {
        std::mem::swap(&mut kappa_c, &mut kappa_i);
    }
    let kappa = kappa_c + kappa_i;
    Ok(BareCavityFit {
        f_c: get(ParamName::CavityFrequency),
        kappa_c,
        kappa_i,
        coupling_ratio: kappa_c / kappa,
        overcoupled: kappa_c > kappa_i,
        regime_ambiguous,
        kappa_i_at_bound: kappa_i <= k_lo * (1.0 + 1e-6),
        fit,
    })
}
