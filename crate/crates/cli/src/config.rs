//! Per-command JSON configuration. Every struct rejects unknown keys, and every
//! dimensional key carries its unit in the name.

use std::fs;
use std::path::{Path, PathBuf};

use dqd_core::efficiency::{SweepAxis, SweepParam, SweepSpec, GAMMA0E_WINDOW};
use dqd_core::fit::{FitInit, InitValue, LmOptions, ParamName, ParamSpec, ResidualMode};
use dqd_core::hybrid::presets;
use dqd_core::rabi::CouplingModel;
use dqd_core::reflectance::linspace;
use dqd_core::stark::{StarkContext, StarkPoint};
use dqd_core::{Branch, HybridParams, OperatingPoint, SusceptibilityModel};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{as_config, CliError};
use crate::report::sha256_hex;

/// Evenly spaced axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisConfig {
    pub start_hz: f64,
    pub stop_hz: f64,
    pub points: usize,
}

impl AxisConfig {
    pub fn new(start_hz: f64, stop_hz: f64, points: usize) -> Self {
        Self { start_hz, stop_hz, points }
    }

    pub fn values(&self) -> Vec<f64> {
        linspace(self.start_hz, self.stop_hz, self.points)
    }

    fn validate(&self, name: &str) -> Result<(), CliError> {
        if self.points == 0 {
            return Err(CliError::config(format!("{name}.points: must be ≥ 1")));
        }
        if !(self.start_hz.is_finite() && self.stop_hz.is_finite()) {
            return Err(CliError::config(format!("{name}: start_hz and stop_hz must be finite")));
        }
        if self.points > 1 && self.stop_hz <= self.start_hz {
            return Err(CliError::config(format!("{name}: stop_hz must exceed start_hz")));
        }
        Ok(())
    }
}

/// Where the qubit is parked: a named resonant branch or an explicit detuning.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatingPointConfig {
    /// δ = ±δ_r; defaults to the minus branch.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branch: Option<Branch>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_hz: Option<f64>,
}

impl OperatingPointConfig {
    pub fn resolve(&self, params: &HybridParams) -> Result<OperatingPoint, CliError> {
        match (self.branch, self.delta_hz) {
            (Some(_), Some(_)) => Err(CliError::config("operating_point: give either branch or delta_hz, not both")),
            (_, Some(d)) if !d.is_finite() => Err(CliError::config("operating_point.delta_hz: must be finite")),
            (_, Some(d)) => Ok(OperatingPoint::new(d)),
            (Some(Branch::Zero), None) => Err(CliError::config("operating_point.branch: must be plus or minus")),
            (b, None) => OperatingPoint::resonant(params.f_c, params.t_c, b.unwrap_or(Branch::Minus)).map_err(as_config),
        }
    }
}

fn full_rabi() -> SusceptibilityModel {
    SusceptibilityModel::FullRabi
}

fn coupling_full_rabi() -> CouplingModel {
    CouplingModel::FullRabi
}

fn default_window() -> [f64; 2] {
    GAMMA0E_WINDOW
}

fn check_window(w: [f64; 2]) -> Result<(), CliError> {
    if !(w[0] >= 0.0 && w[0] <= w[1] && w[1].is_finite()) {
        return Err(CliError::config("gamma0e_window_hz: needs 0 ≤ min ≤ max < ∞"));
    }
    Ok(())
}

fn check_params(params: &HybridParams) -> Result<(), CliError> {
    params.validate().map_err(|e| CliError::config(format!("params: {e}")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    pub params: HybridParams,
    #[serde(default = "full_rabi")]
    pub model: SusceptibilityModel,
    pub delta_axis: AxisConfig,
    pub f_d_axis: AxisConfig,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        let params = presets::table1_3646();
        Self {
            params,
            model: SusceptibilityModel::FullRabi,
            delta_axis: AxisConfig::new(-5e9, 5e9, 201),
            f_d_axis: AxisConfig::new(params.f_c - 150e6, params.f_c + 150e6, 121),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigenConfig {
    pub params: HybridParams,
    #[serde(default = "coupling_full_rabi")]
    pub model: CouplingModel,
    pub delta_axis: AxisConfig,
    /// Fock cutoff; chosen by convergence when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    /// Relative tolerance of the automatic cutoff search.
    #[serde(default = "default_cutoff_tol")]
    pub cutoff_tol: f64,
}

fn default_cutoff_tol() -> f64 {
    1e-9
}

impl Default for EigenConfig {
    fn default() -> Self {
        Self {
            params: presets::table1_3646(),
            model: CouplingModel::FullRabi,
            delta_axis: AxisConfig::new(-5e9, 5e9, 201),
            n_max: None,
            cutoff_tol: default_cutoff_tol(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FomConfig {
    /// Current noise floor δI in amperes.
    pub current_noise_a: f64,
    pub bandwidth_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EfficiencyConfig {
    pub params: HybridParams,
    #[serde(default)]
    pub operating_point: OperatingPointConfig,
    /// Excited-state tunneling rate; matched to κ (within the window) when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_0e_hz: Option<f64>,
    #[serde(default = "default_window")]
    pub gamma0e_window_hz: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub figures_of_merit: Option<FomConfig>,
}

impl Default for EfficiencyConfig {
    fn default() -> Self {
        Self {
            params: presets::operating_point_3646(),
            operating_point: OperatingPointConfig::default(),
            gamma_0e_hz: Some(presets::GAMMA_0E_3646),
            gamma0e_window_hz: GAMMA0E_WINDOW,
            figures_of_merit: Some(FomConfig {
                current_noise_a: 50e-15,
                bandwidth_hz: 5.0,
            }),
        }
    }
}

pub fn default_sweep() -> SweepSpec {
    SweepSpec {
        axis1: SweepAxis::new(SweepParam::KappaC, 5e6, 50e6, 100),
        axis2: SweepAxis::new(SweepParam::G0, 200e6, 400e6, 100),
        fixed: presets::landscape_baseline(),
        branch: Branch::Minus,
        gamma0e_window: GAMMA0E_WINDOW,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateConfig {
    pub context: StarkContext,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<StarkPoint>,
    /// CSV with columns p_vna_watt,f_q_hz; relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points_csv: Option<PathBuf>,
    #[serde(default)]
    pub free_intercept: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetRef {
    /// Spectrum CSV or dataset JSON; relative to the config file.
    pub path: PathBuf,
    /// Overrides the label taken from the file name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// Uniform per-point noise level used to weight residuals.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    /// `bare_cavity` fits each single-detuning trace on its own.
    #[serde(default = "full_rabi")]
    pub model: SusceptibilityModel,
    /// Defaults to the kind of data in the first dataset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual_mode: Option<ResidualMode>,
    pub datasets: Vec<DatasetRef>,
    #[serde(default)]
    pub init: FitInit,
    /// Replaces the default hybrid parameter table.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parameters: Option<Vec<ParamSpec>>,
    #[serde(default)]
    pub lm: LmOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub params: HybridParams,
    #[serde(default)]
    pub operating_point: OperatingPointConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_0e_hz: Option<f64>,
    #[serde(default = "default_window")]
    pub gamma0e_window_hz: [f64; 2],
    #[serde(default = "default_oracle_cutoff")]
    pub n_max: usize,
    /// Drive frequency; the cavity frequency when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_d_hz: Option<f64>,
    #[serde(default = "default_fluxes")]
    pub n_dot_list_per_s: Vec<f64>,
}

fn default_oracle_cutoff() -> usize {
    6
}

fn default_fluxes() -> Vec<f64> {
    vec![1e5, 2e5, 4e5]
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            params: HybridParams {
                f_c: 3.646e9,
                ..presets::landscape_baseline()
            },
            operating_point: OperatingPointConfig::default(),
            gamma_0e_hz: None,
            gamma0e_window_hz: GAMMA0E_WINDOW,
            n_max: default_oracle_cutoff(),
            f_d_hz: None,
            n_dot_list_per_s: default_fluxes(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthDataset {
    pub label: String,
    pub params: HybridParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpectrumConfig {
    pub datasets: Vec<SynthDataset>,
    #[serde(default = "full_rabi")]
    pub model: SusceptibilityModel,
    pub delta_axis: AxisConfig,
    /// Drive axis spans f_c ± this value for each dataset.
    pub f_d_half_span_hz: f64,
    pub f_d_points: usize,
    /// Standard deviation of the additive noise (absolute, in units of |S₁₁|).
    pub noise_sigma: f64,
    #[serde(default)]
    pub residual_mode: ResidualMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthStarkConfig {
    pub beta: f64,
    pub context: StarkContext,
    pub powers_watt: Vec<f64>,
    /// Relative standard deviation of the noise on each Stark shift.
    pub rel_noise: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SynthConfig {
    Spectrum(SynthSpectrumConfig),
    Stark(SynthStarkConfig),
}

impl SynthConfig {
    pub fn seed(&self) -> Option<u64> {
        match self {
            SynthConfig::Spectrum(c) => c.seed,
            SynthConfig::Stark(c) => c.seed,
        }
    }
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig::Spectrum(SynthSpectrumConfig {
            datasets: presets::shared_fit_truth()
                .into_iter()
                .map(|(label, params)| SynthDataset { label, params })
                .collect(),
            model: SusceptibilityModel::FullRabi,
            delta_axis: AxisConfig::new(-5e9, 5e9, 81),
            f_d_half_span_hz: 150e6,
            f_d_points: 61,
            noise_sigma: 0.01,
            residual_mode: ResidualMode::Magnitude,
            seed: None,
        })
    }
}

/// Checks that go beyond the schema.
pub trait Validate {
    fn validate(&self) -> Result<(), CliError>;
}

impl Validate for SpectrumConfig {
    fn validate(&self) -> Result<(), CliError> {
        check_params(&self.params)?;
        self.delta_axis.validate("delta_axis")?;
        self.f_d_axis.validate("f_d_axis")
    }
}

impl Validate for EigenConfig {
    fn validate(&self) -> Result<(), CliError> {
        check_params(&self.params)?;
        self.delta_axis.validate("delta_axis")?;
        if self.n_max == Some(0) {
            return Err(CliError::config("n_max: must be ≥ 1"));
        }
        if !(self.cutoff_tol > 0.0) {
            return Err(CliError::config("cutoff_tol: must be > 0"));
        }
        Ok(())
    }
}

impl Validate for EfficiencyConfig {
    fn validate(&self) -> Result<(), CliError> {
        check_params(&self.params)?;
        check_window(self.gamma0e_window_hz)?;
        if let Some(g) = self.gamma_0e_hz {
            if !(g.is_finite() && g >= 0.0) {
                return Err(CliError::config("gamma_0e_hz: must be finite and ≥ 0"));
            }
        }
        if let Some(f) = self.figures_of_merit {
            if !(f.current_noise_a > 0.0 && f.bandwidth_hz > 0.0) {
                return Err(CliError::config("figures_of_merit: current_noise_a and bandwidth_hz must be positive"));
            }
        }
        self.operating_point.resolve(&self.params).map(|_| ())
    }
}

impl Validate for SweepSpec {
    fn validate(&self) -> Result<(), CliError> {
        SweepSpec::validate(self).map_err(as_config)
    }
}

impl Validate for CalibrateConfig {
    fn validate(&self) -> Result<(), CliError> {
        if self.points.is_empty() == self.points_csv.is_none() {
            return Err(CliError::config("give exactly one of `points` or `points_csv`"));
        }
        Ok(())
    }
}

impl Validate for FitConfig {
    fn validate(&self) -> Result<(), CliError> {
        if self.datasets.is_empty() {
            return Err(CliError::config("datasets: at least one dataset is required"));
        }
        for (k, d) in self.datasets.iter().enumerate() {
            if let Some(s) = d.sigma {
                if !(s.is_finite() && s > 0.0) {
                    return Err(CliError::config(format!("datasets[{k}].sigma: must be positive")));
                }
            }
        }
        Ok(())
    }
}

impl Validate for OracleConfig {
    fn validate(&self) -> Result<(), CliError> {
        check_params(&self.params)?;
        check_window(self.gamma0e_window_hz)?;
        if self.n_max < 2 {
            return Err(CliError::config("n_max: must be ≥ 2"));
        }
        if self.n_dot_list_per_s.len() < 3 || self.n_dot_list_per_s.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(CliError::config("n_dot_list_per_s: needs at least three positive fluxes"));
        }
        self.operating_point.resolve(&self.params).map(|_| ())
    }
}

impl Validate for SynthConfig {
    fn validate(&self) -> Result<(), CliError> {
        match self {
            SynthConfig::Spectrum(c) => {
                if c.datasets.is_empty() {
                    return Err(CliError::config("datasets: at least one dataset is required"));
                }
                for d in &c.datasets {
                    check_params(&d.params)?;
                    if d.label.is_empty() || d.label.contains(['/', '\\']) {
                        return Err(CliError::config(format!("label `{}`: must be a plain file-name stem", d.label)));
                    }
                }
                c.delta_axis.validate("delta_axis")?;
                if !(c.f_d_half_span_hz > 0.0 && c.f_d_half_span_hz.is_finite()) || c.f_d_points == 0 {
                    return Err(CliError::config("f_d_half_span_hz and f_d_points must be positive"));
                }
                if !(c.noise_sigma >= 0.0 && c.noise_sigma.is_finite()) {
                    return Err(CliError::config("noise_sigma: must be finite and ≥ 0"));
                }
                Ok(())
            }
            SynthConfig::Stark(c) => {
                if !(c.beta > 0.0 && c.beta.is_finite()) {
                    return Err(CliError::config("beta: must be positive"));
                }
                if c.powers_watt.is_empty() || c.powers_watt.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                    return Err(CliError::config("powers_watt: needs finite non-negative powers"));
                }
                if !(c.rel_noise >= 0.0 && c.rel_noise.is_finite()) {
                    return Err(CliError::config("rel_noise: must be finite and ≥ 0"));
                }
                Ok(())
            }
        }
    }
}

/// A parsed configuration with its provenance.
#[derive(Debug, Clone)]
pub struct Loaded<T> {
    pub value: T,
    pub sha256: String,
    /// Directory that relative paths inside the config refer to.
    pub base_dir: PathBuf,
}

/// Parses and validates the config at `path`, or falls back to `default` when no path is
/// given. Errors carry the file name and, for syntax or schema problems, line and column.
pub fn load<T>(path: Option<&Path>, default: Option<fn() -> T>) -> Result<Loaded<T>, CliError>
where
    T: DeserializeOwned + Serialize + Validate,
{
    let loaded = match (path, default) {
        (Some(p), _) => {
            let bytes = fs::read(p).map_err(|e| CliError::config(format!("{}: {e}", p.display())))?;
            let value: T =
                serde_json::from_slice(&bytes).map_err(|e| CliError::config(format!("{}: {e}", p.display())))?;
            Loaded {
                value,
                sha256: sha256_hex(&bytes),
                base_dir: p.parent().map(Path::to_path_buf).unwrap_or_default(),
            }
        }
        (None, Some(d)) => {
            let value = d();
            let bytes = serde_json::to_vec(&value).map_err(|e| CliError::config(e.to_string()))?;
            Loaded {
                value,
                sha256: sha256_hex(&bytes),
                base_dir: PathBuf::from("."),
            }
        }
        (None, None) => return Err(CliError::config("this command needs --config <path>")),
    };
    loaded
        .value
        .validate()
        .map_err(|e| match (e, path) {
            (CliError::Config(m), Some(p)) => CliError::config(format!("{}: {m}", p.display())),
            (e, _) => e,
        })?;
    Ok(loaded)
}

/// Initial values for a fit of synthetic data: per-dataset values at their generating
/// values, shared values multiplied by `shared_scale`.
pub fn synth_init(datasets: &[SynthDataset], shared_scale: f64) -> FitInit {
    let first = datasets[0].params;
    let per = |f: fn(&HybridParams) -> f64| InitValue::PerDataset(datasets.iter().map(|d| f(&d.params)).collect());
    let gamma_tot = first
        .decoherence_rate(OperatingPoint::new(0.0))
        .unwrap_or(first.gamma_minus + 2.0 * first.gamma_phi);
    FitInit::from([
        (ParamName::G0, InitValue::Scalar(first.g0 * shared_scale)),
        (ParamName::TunnelCoupling, InitValue::Scalar(first.t_c * shared_scale)),
        (ParamName::GammaTot, InitValue::Scalar(gamma_tot * shared_scale)),
        (ParamName::CavityFrequency, per(|p| p.f_c)),
        (ParamName::KappaC, per(|p| p.kappa_c)),
        (ParamName::KappaI, per(|p| p.kappa_i)),
    ])
}
