use std::collections::BTreeMap;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::lm::{self, LmOptions, Termination};
use crate::hybrid::{HybridParams, OperatingPoint};
use crate::reflectance::{check_axis, CavityQubitPoint, ComplexSpectrum, SusceptibilityModel};
use crate::{Error, Result};

/// How model and data are compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ResidualMode {
    /// |S₁₁(model)| − |S₁₁(data)|.
    #[default]
    Magnitude,
    /// Real and imaginary parts, interleaved per point.
    Complex,
}

/// Measured or synthetic values on a spectrum grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "values", rename_all = "snake_case")]
pub enum SpectrumValues {
    Complex(Vec<Complex64>),
    Magnitude(Vec<f64>),
}

impl SpectrumValues {
    pub fn len(&self) -> usize {
        match self {
            SpectrumValues::Complex(v) => v.len(),
            SpectrumValues::Magnitude(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn magnitude(&self, i: usize) -> f64 {
        match self {
            SpectrumValues::Complex(v) => v[i].norm(),
            SpectrumValues::Magnitude(v) => v[i],
        }
    }

    fn is_finite(&self, i: usize) -> bool {
        match self {
            SpectrumValues::Complex(v) => v[i].re.is_finite() && v[i].im.is_finite(),
            SpectrumValues::Magnitude(v) => v[i].is_finite(),
        }
    }
}

/// One spectrum belonging to one cavity setting. Layout matches [`ComplexSpectrum`]:
/// detuning is the outer index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    /// Cavity-setting label; must be unique within a fit.
    pub label: String,
    pub f_d_axis: Vec<f64>,
    pub delta_axis: Vec<f64>,
    pub values: SpectrumValues,
    /// Per-point standard deviation. Residuals are divided by it when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Vec<f64>>,
}

impl Dataset {
    pub fn from_spectrum(label: impl Into<String>, spectrum: &ComplexSpectrum) -> Self {
        Self {
            label: label.into(),
            f_d_axis: spectrum.f_d_axis.clone(),
            delta_axis: spectrum.delta_axis.clone(),
            values: SpectrumValues::Complex(spectrum.values.clone()),
            sigma: None,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        check_axis("f_d_axis", &self.f_d_axis)?;
        check_axis("delta_axis", &self.delta_axis)?;
        if self.values.len() != self.f_d_axis.len() * self.delta_axis.len() {
            return Err(Error::invalid(
                format!("dataset `{}`", self.label),
                "value count does not match the axis grid",
            ));
        }
        if let Some(s) = &self.sigma {
            if s.len() != self.values.len() || s.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(Error::invalid(
                    format!("dataset `{}` sigma", self.label),
                    "needs one positive finite σ per point",
                ));
            }
        }
        Ok(())
    }

    /// Indices of non-finite cells, which are excluded from the residuals.
    pub fn flagged_cells(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| !self.values.is_finite(i)).collect()
    }

    pub fn with_uniform_sigma(mut self, sigma: f64) -> Self {
        self.sigma = Some(vec![sigma; self.len()]);
        self
    }
}

/// Named fit parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ParamName {
    #[serde(rename = "g0_hz")]
    G0,
    #[serde(rename = "t_c_hz")]
    TunnelCoupling,
    #[serde(rename = "gamma_tot_hz")]
    GammaTot,
    #[serde(rename = "f_c_hz")]
    CavityFrequency,
    #[serde(rename = "kappa_c_hz")]
    KappaC,
    #[serde(rename = "kappa_i_hz")]
    KappaI,
    /// Background amplitude scale.
    #[serde(rename = "amplitude")]
    Amplitude,
    /// Background phase offset.
    #[serde(rename = "phase_rad")]
    Phase,
    /// Cable delay; phase slope 2π·τ·(f_d − f_mid).
    #[serde(rename = "delay_s")]
    Delay,
}

impl ParamName {
    pub fn is_nuisance(self) -> bool {
        matches!(self, ParamName::Amplitude | ParamName::Phase | ParamName::Delay)
    }

    fn default_value(self) -> Option<f64> {
        match self {
            ParamName::Amplitude => Some(1.0),
            ParamName::Phase | ParamName::Delay => Some(0.0),
            _ => None,
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            ParamName::G0 => "g0_hz",
            ParamName::TunnelCoupling => "t_c_hz",
            ParamName::GammaTot => "gamma_tot_hz",
            ParamName::CavityFrequency => "f_c_hz",
            ParamName::KappaC => "kappa_c_hz",
            ParamName::KappaI => "kappa_i_hz",
            ParamName::Amplitude => "amplitude",
            ParamName::Phase => "phase_rad",
            ParamName::Delay => "delay_s",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamRole {
    SharedAcrossDatasets,
    PerDataset,
    Nuisance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    #[default]
    Linear,
    Log,
}

impl Transform {
    fn forward(self, v: f64) -> f64 {
        match self {
            Transform::Linear => v,
            Transform::Log => v.ln(),
        }
    }

    fn inverse(self, x: f64) -> f64 {
        match self {
            Transform::Linear => x,
            Transform::Log => x.exp(),
        }
    }

    /// dv/dx at physical value `v`.
    fn derivative(self, v: f64) -> f64 {
        match self {
            Transform::Linear => 1.0,
            Transform::Log => v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamSpec {
    pub name: ParamName,
    pub role: ParamRole,
    pub lower: f64,
    pub upper: f64,
    #[serde(default)]
    pub transform: Transform,
    /// Held at its initial value.
    #[serde(default)]
    pub fixed: bool,
}

impl ParamSpec {
    pub fn new(name: ParamName, role: ParamRole, lower: f64, upper: f64, transform: Transform) -> Self {
        Self {
            name,
            role,
            lower,
            upper,
            transform,
            fixed: false,
        }
    }

    pub fn fixed(mut self) -> Self {
        self.fixed = true;
        self
    }
}

/// Which parameters are fitted, how they are shared, and how residuals are formed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitModelSpec {
    pub model: SusceptibilityModel,
    #[serde(default)]
    pub residual_mode: ResidualMode,
    pub parameters: Vec<ParamSpec>,
}

impl FitModelSpec {
    /// Hybrid spectrum model: {g₀, t_c, Γ_tot} shared, {f_c, κ_c, κ_i} per cavity setting.
    pub fn hybrid(model: SusceptibilityModel, residual_mode: ResidualMode) -> Self {
        use ParamName::*;
        use ParamRole::*;
        Self {
            model,
            residual_mode,
            parameters: vec![
                ParamSpec::new(G0, SharedAcrossDatasets, 1e6, 2e9, Transform::Log),
                ParamSpec::new(TunnelCoupling, SharedAcrossDatasets, 1e6, 5e9, Transform::Log),
                ParamSpec::new(GammaTot, SharedAcrossDatasets, 1e5, 2e10, Transform::Log),
                ParamSpec::new(CavityFrequency, PerDataset, 1e8, 2e10, Transform::Linear),
                ParamSpec::new(KappaC, PerDataset, 1e3, 1e9, Transform::Log),
                ParamSpec::new(KappaI, PerDataset, 1e3, 1e9, Transform::Log),
            ],
        }
    }

    /// Adds a per-dataset nuisance parameter.
    pub fn with_nuisance(mut self, name: ParamName, lower: f64, upper: f64) -> Self {
        self.parameters
            .push(ParamSpec::new(name, ParamRole::Nuisance, lower, upper, Transform::Linear));
        self
    }

    pub fn param(&self, name: ParamName) -> Option<&ParamSpec> {
        self.parameters.iter().find(|p| p.name == name)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, p) in self.parameters.iter().enumerate() {
            let key = p.name.key();
            if self.parameters[..i].iter().any(|q| q.name == p.name) {
                return Err(Error::invalid(key, "listed twice"));
            }
            if !(p.lower.is_finite() && p.upper.is_finite() && p.lower < p.upper) {
                return Err(Error::invalid(key, "needs finite bounds with lower < upper"));
            }
            if p.transform == Transform::Log && p.lower <= 0.0 {
                return Err(Error::invalid(key, "log transform requires a positive lower bound"));
            }
            if p.name.is_nuisance() != (p.role == ParamRole::Nuisance) {
                return Err(Error::invalid(key, "nuisance role is reserved for amplitude/phase/delay"));
            }
        }
        let mut required = vec![ParamName::CavityFrequency, ParamName::KappaC, ParamName::KappaI];
        if self.model != SusceptibilityModel::BareCavity {
            required.extend([ParamName::G0, ParamName::TunnelCoupling, ParamName::GammaTot]);
        }
        for name in required {
            if self.param(name).is_none() {
                return Err(Error::invalid(name.key(), "required by the selected model"));
            }
        }
        if self.residual_mode == ResidualMode::Magnitude {
            for name in [ParamName::Phase, ParamName::Delay] {
                if self.param(name).is_some_and(|p| !p.fixed) {
                    return Err(Error::invalid(name.key(), "not identifiable from magnitude residuals"));
                }
            }
        }
        Ok(())
    }
}

/// Initial value for a parameter: one number (broadcast) or one per dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitValue {
    Scalar(f64),
    PerDataset(Vec<f64>),
}

pub type FitInit = BTreeMap<ParamName, InitValue>;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Slot {
    param: usize,
    /// Canonical dataset index, `None` for shared parameters.
    dataset: Option<usize>,
}

/// Model spec, datasets and the flattened parameter layout.
///
/// Datasets are held in a canonical (label-sorted) order so that the optimum does not
/// depend on the order in which the caller lists them.
#[derive(Debug, Clone)]
pub struct FitProblem {
    spec: FitModelSpec,
    datasets: Vec<Dataset>,
    /// `canonical_to_input[k]` is the caller's index of canonical dataset `k`.
    canonical_to_input: Vec<usize>,
    slots: Vec<Slot>,
    init: Vec<f64>,
}

/// Physical inputs of one dataset's model.
#[derive(Debug, Clone, Copy)]
struct DatasetModel {
    params: HybridParams,
    amplitude: f64,
    phase: f64,
    delay: f64,
}

impl FitProblem {
    pub fn new(spec: FitModelSpec, datasets: Vec<Dataset>, init: &FitInit) -> Result<Self> {
        spec.validate()?;
        if datasets.is_empty() {
            return Err(Error::invalid("datasets", "at least one dataset is required"));
        }
        for d in &datasets {
            d.validate()?;
            if spec.residual_mode == ResidualMode::Complex && matches!(d.values, SpectrumValues::Magnitude(_)) {
                return Err(Error::invalid(
                    format!("dataset `{}`", d.label),
                    "complex residual mode needs complex data",
                ));
            }
        }
        let mut order: Vec<usize> = (0..datasets.len()).collect();
        order.sort_by(|&a, &b| datasets[a].label.cmp(&datasets[b].label));
        if order.windows(2).any(|w| datasets[w[0]].label == datasets[w[1]].label) {
            return Err(Error::invalid("datasets", "labels must be unique"));
        }
        let n_ds = datasets.len();
        let canonical: Vec<Dataset> = order.iter().map(|&i| datasets[i].clone()).collect();

        let mut slots = Vec::new();
        let mut values = Vec::new();
        for (pi, p) in spec.parameters.iter().enumerate() {
            let shared = p.role == ParamRole::SharedAcrossDatasets;
            let per_input: Vec<f64> = match (init.get(&p.name), p.name.default_value()) {
                (Some(InitValue::Scalar(v)), _) => vec![*v; if shared { 1 } else { n_ds }],
                (Some(InitValue::PerDataset(v)), _) if !shared => {
                    if v.len() != n_ds {
                        return Err(Error::invalid(p.name.key(), "needs one initial value per dataset"));
                    }
                    v.clone()
                }
                (Some(InitValue::PerDataset(_)), _) => {
                    return Err(Error::invalid(p.name.key(), "shared parameter takes a single initial value"))
                }
                (None, Some(d)) => vec![d; if shared { 1 } else { n_ds }],
                (None, None) => return Err(Error::invalid(p.name.key(), "missing initial value")),
            };
            for v in &per_input {
                if !(v.is_finite() && *v >= p.lower && *v <= p.upper) {
                    return Err(Error::invalid(
                        p.name.key(),
                        format!("initial value {v} outside bounds [{}, {}]", p.lower, p.upper),
                    ));
                }
            }
            if shared {
                slots.push(Slot { param: pi, dataset: None });
                values.push(per_input[0]);
            } else {
                for (k, &input_idx) in order.iter().enumerate() {
                    slots.push(Slot { param: pi, dataset: Some(k) });
                    values.push(per_input[input_idx]);
                }
            }
        }
        Ok(Self {
            spec,
            datasets: canonical,
            canonical_to_input: order,
            slots,
            init: values,
        })
    }

    pub fn spec(&self) -> &FitModelSpec {
        &self.spec
    }

    /// Datasets in canonical order.
    pub fn datasets(&self) -> &[Dataset] {
        &self.datasets
    }

    /// Initial physical values, one per slot.
    pub fn initial_values(&self) -> &[f64] {
        &self.init
    }

    /// (parameter name, dataset label) for every slot.
    pub fn slot_names(&self) -> Vec<(ParamName, Option<String>)> {
        self.slots
            .iter()
            .map(|s| {
                (
                    self.spec.parameters[s.param].name,
                    s.dataset.map(|k| self.datasets[k].label.clone()),
                )
            })
            .collect()
    }

    fn lookup(&self, values: &[f64], name: ParamName, dataset: usize) -> Option<f64> {
        self.slots
            .iter()
            .zip(values)
            .find(|(s, _)| self.spec.parameters[s.param].name == name && s.dataset.is_none_or(|d| d == dataset))
            .map(|(_, v)| *v)
    }

    fn dataset_model(&self, values: &[f64], k: usize) -> DatasetModel {
        let get = |n: ParamName, default: f64| self.lookup(values, n, k).unwrap_or(default);
        let bare = self.spec.model == SusceptibilityModel::BareCavity;
        DatasetModel {
            params: HybridParams {
                f_c: get(ParamName::CavityFrequency, 0.0),
                kappa_c: get(ParamName::KappaC, 0.0),
                kappa_i: get(ParamName::KappaI, 0.0),
                g0: if bare { 0.0 } else { get(ParamName::G0, 0.0) },
                t_c: get(ParamName::TunnelCoupling, 1.0),
                gamma_minus: 0.0,
                gamma_phi: 0.0,
                gamma_l: 0.0,
                gamma_r: 0.0,
                gamma_tot: Some(get(ParamName::GammaTot, 1.0)),
            },
            amplitude: get(ParamName::Amplitude, 1.0),
            phase: get(ParamName::Phase, 0.0),
            delay: get(ParamName::Delay, 0.0),
        }
    }

    /// Model prediction for canonical dataset `k` (non-finite data cells included).
    pub fn predict(&self, values: &[f64], k: usize) -> Result<Vec<Complex64>> {
        let m = self.dataset_model(values, k);
        let d = &self.datasets[k];
        let model = self.spec.model;
        let f_mid = 0.5 * (d.f_d_axis[0] + d.f_d_axis[d.f_d_axis.len() - 1]);
        let mut out = Vec::with_capacity(d.len());
        for (i, &delta) in d.delta_axis.iter().enumerate() {
            let point = CavityQubitPoint::new(&m.params, OperatingPoint::new(delta), model).map_err(|e| {
                Error::ModelEvaluation {
                    dataset: d.label.clone(),
                    index: i * d.f_d_axis.len(),
                    source: Box::new(e),
                }
            })?;
            for (j, &f_d) in d.f_d_axis.iter().enumerate() {
                let s = point.s11(f_d, model).map_err(|e| Error::ModelEvaluation {
                    dataset: d.label.clone(),
                    index: i * d.f_d_axis.len() + j,
                    source: Box::new(e),
                })?;
                let phase = m.phase + crate::constants::TWO_PI * m.delay * (f_d - f_mid);
                out.push(s * Complex64::from_polar(m.amplitude, phase));
            }
        }
        Ok(out)
    }

    /// Weighted residuals (model − data) of every dataset in canonical order, plus the
    /// end offset of each dataset's block.
    pub fn residual_blocks(&self, values: &[f64]) -> Result<(Vec<f64>, Vec<usize>)> {
        if values.len() != self.slots.len() {
            return Err(Error::invalid("theta", "length does not match the parameter layout"));
        }
        for (s, v) in self.slots.iter().zip(values) {
            let p = &self.spec.parameters[s.param];
            if !(*v >= p.lower && *v <= p.upper) {
                return Err(Error::invalid(p.name.key(), format!("value {v} outside bounds")));
            }
        }
        let mut out = Vec::new();
        let mut ends = Vec::with_capacity(self.datasets.len());
        for (k, d) in self.datasets.iter().enumerate() {
            let pred = self.predict(values, k)?;
            for (i, p) in pred.iter().enumerate() {
                if !d.values.is_finite(i) {
                    continue;
                }
                let w = d.sigma.as_ref().map_or(1.0, |s| 1.0 / s[i]);
                match self.spec.residual_mode {
                    ResidualMode::Magnitude => out.push(w * (p.norm() - d.values.magnitude(i))),
                    ResidualMode::Complex => {
                        let SpectrumValues::Complex(v) = &d.values else { unreachable!() };
                        out.push(w * (p.re - v[i].re));
                        out.push(w * (p.im - v[i].im));
                    }
                }
            }
            ends.push(out.len());
        }
        Ok((out, ends))
    }

    /// Concatenated weighted residuals for the physical slot values `values`.
    pub fn residuals(&self, values: &[f64]) -> Result<Vec<f64>> {
        Ok(self.residual_blocks(values)?.0)
    }

    fn free_slots(&self) -> Vec<usize> {
        (0..self.slots.len())
            .filter(|&i| !self.spec.parameters[self.slots[i].param].fixed)
            .collect()
    }

    fn transform_of(&self, slot: usize) -> Transform {
        self.spec.parameters[self.slots[slot].param].transform
    }

    /// Levenberg–Marquardt fit from the initial values.
    pub fn fit(&self, options: &LmOptions) -> Result<FitResult> {
        let free = self.free_slots();
        let lower: Vec<f64> = free
            .iter()
            .map(|&i| self.transform_of(i).forward(self.spec.parameters[self.slots[i].param].lower))
            .collect();
        let upper: Vec<f64> = free
            .iter()
            .map(|&i| self.transform_of(i).forward(self.spec.parameters[self.slots[i].param].upper))
            .collect();
        let x0 = DVector::from_iterator(
            free.len(),
            free.iter().map(|&i| self.transform_of(i).forward(self.init[i])),
        );
        let to_physical = |x: &DVector<f64>| -> Vec<f64> {
            let mut v = self.init.clone();
            for (k, &i) in free.iter().enumerate() {
                let p = &self.spec.parameters[self.slots[i].param];
                v[i] = self.transform_of(i).inverse(x[k]).clamp(p.lower, p.upper);
            }
            v
        };
        let objective = |x: &DVector<f64>| -> Result<DVector<f64>> {
            Ok(DVector::from_vec(self.residuals(&to_physical(x))?))
        };
        let report = lm::minimize(objective, x0, &lower, &upper, options)?;
        let values = to_physical(&report.x);
        let (res, ends) = self.residual_blocks(&values)?;

        let m = res.len();
        let n = free.len();
        let dof = m.saturating_sub(n);
        let reduced_chi2 = if dof > 0 { 2.0 * report.cost / dof as f64 } else { f64::NAN };
        let scale = if dof > 0 { reduced_chi2 } else { 1.0 };
        let cov_x = lm::normal_matrix_pinv(&report.jacobian) * scale;
        let dv: Vec<f64> = free
            .iter()
            .map(|&i| self.transform_of(i).derivative(values[i]))
            .collect();
        let covariance: Vec<Vec<f64>> = (0..n)
            .map(|a| (0..n).map(|b| dv[a] * cov_x[(a, b)] * dv[b]).collect())
            .collect();

        let mut std_errors = vec![0.0; self.slots.len()];
        for (k, &i) in free.iter().enumerate() {
            std_errors[i] = covariance[k][k].max(0.0).sqrt();
        }

        let names = self.slot_names();
        let mut parameters: Vec<(usize, FittedParameter)> = names
            .into_iter()
            .enumerate()
            .map(|(i, (name, dataset))| {
                let order = self.slots[i].param * (self.datasets.len() + 1)
                    + self.slots[i].dataset.map_or(0, |k| self.canonical_to_input[k] + 1);
                (
                    order,
                    FittedParameter {
                        name,
                        dataset,
                        value: values[i],
                        std_error: std_errors[i],
                        fixed: self.spec.parameters[self.slots[i].param].fixed,
                    },
                )
            })
            .collect();
        parameters.sort_by_key(|(o, _)| *o);

        let mut per_dataset: Vec<(usize, DatasetStats)> = Vec::new();
        let mut start = 0;
        for (k, &end) in ends.iter().enumerate() {
            let block = &res[start..end];
            let chi2: f64 = block.iter().map(|r| r * r).sum();
            per_dataset.push((
                self.canonical_to_input[k],
                DatasetStats {
                    label: self.datasets[k].label.clone(),
                    residuals: block.len(),
                    chi2,
                    rms: if block.is_empty() { 0.0 } else { (chi2 / block.len() as f64).sqrt() },
                },
            ));
            start = end;
        }
        per_dataset.sort_by_key(|(o, _)| *o);

        Ok(FitResult {
            parameters: parameters.into_iter().map(|(_, p)| p).collect(),
            covariance,
            cost: report.cost,
            residual_norm: (2.0 * report.cost).sqrt(),
            reduced_chi2,
            iterations: report.iterations,
            converged: report.termination.converged(),
            termination: report.termination,
            per_dataset: per_dataset.into_iter().map(|(_, s)| s).collect(),
            cost_history: report.cost_history,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedParameter {
    pub name: ParamName,
    /// Dataset label for per-dataset and nuisance parameters.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<String>,
    pub value: f64,
    pub std_error: f64,
    pub fixed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub label: String,
    pub residuals: usize,
    pub chi2: f64,
    pub rms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub parameters: Vec<FittedParameter>,
    /// Covariance of the free parameters (physical units), in `parameters` order with
    /// fixed entries skipped.
    pub covariance: Vec<Vec<f64>>,
    pub cost: f64,
    pub residual_norm: f64,
    pub reduced_chi2: f64,
    pub iterations: usize,
    pub converged: bool,
    pub termination: Termination,
    pub per_dataset: Vec<DatasetStats>,
    pub cost_history: Vec<f64>,
}

impl FitResult {
    fn find(&self, name: ParamName, dataset: Option<&str>) -> Option<&FittedParameter> {
        self.parameters
            .iter()
            .find(|p| p.name == name && (p.dataset.is_none() || p.dataset.as_deref() == dataset))
    }

    /// Fitted value of `name`; `dataset` selects the cavity setting for per-dataset parameters.
    pub fn value(&self, name: ParamName, dataset: Option<&str>) -> Option<f64> {
        self.find(name, dataset).map(|p| p.value)
    }

    pub fn std_error(&self, name: ParamName, dataset: Option<&str>) -> Option<f64> {
        self.find(name, dataset).map(|p| p.std_error)
    }
}

/// Residual vector for the physical parameter values `theta`.
pub fn residuals(problem: &FitProblem, theta: &[f64]) -> Result<Vec<f64>> {
    problem.residuals(theta)
}

/// Runs the damped Gauss–Newton fit of `problem`.
pub fn fit_lm(problem: &FitProblem, options: &LmOptions) -> Result<FitResult> {
    problem.fit(options)
}
