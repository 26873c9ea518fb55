//! Photon detection efficiency as the product of four factors (cavity input, impedance
//! match, escape before relaxation, directivity), detector figures of merit, and
//! matched-rate efficiency landscapes over pairs of device parameters.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{ELEMENTARY_CHARGE, PLANCK};
use crate::hybrid::{gamma_tot, kappa_dqd, lead_rates, resonant_detuning, Branch, HybridParams, LeadRates, OperatingPoint};
use crate::reflectance::linspace;
use crate::{Error, Result};

/// Net fraction of excitation cycles that move charge left-to-right:
/// D = (Γ_Re·Γ_gL − Γ_Le·Γ_gR)/(Γ₀e·Γ_g0).
pub fn directivity(rates: &LeadRates) -> Result<f64> {
    let den = rates.gamma_0e() * rates.gamma_g0();
    if den <= 0.0 {
        return Err(Error::ZeroDenominator("directivity (Γ₀e·Γ_g0 = 0)"));
    }
    Ok((rates.gamma_re * rates.gamma_gl - rates.gamma_le * rates.gamma_gr) / den)
}

/// Photon flux Ṅ = P/(h·f) in photons per second.
pub fn photon_flux(power: f64, f: f64) -> f64 {
    power / (PLANCK * f)
}

/// Sign of the photocurrent relative to the left-to-right convention of [`directivity`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyBreakdown {
    /// κ_c/κ.
    pub f_in: f64,
    /// 4κ_DQDκ/(κ_DQD + κ)².
    pub f_match: f64,
    /// Γ₀e/(Γ₀e + γ₋).
    pub f_escape: f64,
    /// Signed directivity.
    pub f_dir: f64,
    /// Signed product of the four factors.
    pub eta: f64,
    pub g: f64,
    pub gamma_tot: f64,
    pub kappa_dqd: f64,
    pub gamma_0e: f64,
}

impl EfficiencyBreakdown {
    pub fn eta_abs(&self) -> f64 {
        self.eta.abs()
    }

    pub fn polarity(&self) -> Polarity {
        if self.eta > 0.0 {
            Polarity::Positive
        } else if self.eta < 0.0 {
            Polarity::Negative
        } else {
            Polarity::Zero
        }
    }
}

pub fn impedance_match(kappa_dqd: f64, kappa: f64) -> Result<f64> {
    let s = kappa_dqd + kappa;
    if s <= 0.0 {
        return Err(Error::ZeroDenominator("impedance match (κ_DQD + κ = 0)"));
    }
    Ok(4.0 * kappa_dqd * kappa / (s * s))
}

/// Evaluates every efficiency factor at `op` with the excited-state tunneling rate set
/// to `gamma_0e`. Lead rates keep the left/right ratio of `params` and are rescaled so
/// that their excited-state sum equals `gamma_0e`; Γ_tot is assembled from its parts.
pub fn efficiency_breakdown(params: &HybridParams, op: OperatingPoint, gamma_0e: f64) -> Result<EfficiencyBreakdown> {
    params.validate()?;
    if !(gamma_0e >= 0.0 && gamma_0e.is_finite()) {
        return Err(Error::invalid("gamma_0e", "must be finite and ≥ 0"));
    }
    let kappa = params.kappa();
    if kappa <= 0.0 {
        return Err(Error::ZeroDenominator("f_in (κ = 0)"));
    }
    let g = params.coupling_at(op)?;
    let g_tot = gamma_tot(params, gamma_0e);
    let k_dqd = kappa_dqd(g, g_tot)?;
    let f_dir = directivity(&lead_rates(params, op)?)?;
    let escape_den = gamma_0e + params.gamma_minus;
    if escape_den <= 0.0 {
        return Err(Error::ZeroDenominator("f_escape (Γ₀e + γ₋ = 0)"));
    }
    let f_in = params.kappa_c / kappa;
    let f_match = impedance_match(k_dqd, kappa)?;
    let f_escape = gamma_0e / escape_den;
    Ok(EfficiencyBreakdown {
        f_in,
        f_match,
        f_escape,
        f_dir,
        eta: f_in * f_match * f_escape * f_dir,
        g,
        gamma_tot: g_tot,
        kappa_dqd: k_dqd,
        gamma_0e,
    })
}

/// Low-drive photocurrent I = e·Ṅ·η (signed).
pub fn photocurrent_linear(n_dot: f64, params: &HybridParams, op: OperatingPoint, gamma_0e: f64) -> Result<f64> {
    if !(n_dot >= 0.0) {
        return Err(Error::invalid("n_dot", "must be ≥ 0"));
    }
    Ok(ELEMENTARY_CHARGE * n_dot * efficiency_breakdown(params, op, gamma_0e)?.eta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiguresOfMerit {
    /// Current responsivity e·|η|/(h·f_c) in A/W.
    pub responsivity: f64,
    /// Noise-equivalent power δI/(R·√B) in W/√Hz.
    pub nep: f64,
    /// 1/Γ₀e + 1/Γ_g0 in seconds.
    pub dead_time: f64,
}

pub fn figures_of_merit(
    eta: f64,
    f_c: f64,
    delta_i: f64,
    bandwidth: f64,
    gamma_0e: f64,
    gamma_g0: f64,
) -> Result<FiguresOfMerit> {
    for (name, v) in [
        ("f_c", f_c),
        ("delta_i", delta_i),
        ("bandwidth", bandwidth),
        ("gamma_0e", gamma_0e),
        ("gamma_g0", gamma_g0),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::invalid(name, "must be positive"));
        }
    }
    if eta == 0.0 || !eta.is_finite() {
        return Err(Error::invalid("eta", "must be non-zero"));
    }
    let responsivity = ELEMENTARY_CHARGE * eta.abs() / (PLANCK * f_c);
    Ok(FiguresOfMerit {
        responsivity,
        nep: delta_i / (responsivity * bandwidth.sqrt()),
        dead_time: 1.0 / gamma_0e + 1.0 / gamma_g0,
    })
}

/// Default tunability window for Γ₀e.
pub const GAMMA0E_WINDOW: [f64; 2] = [0.0, 4.0e9];

/// Γ₀e that makes κ_DQD = κ at `op`, clamped to `window`.
pub fn matched_gamma0e(params: &HybridParams, op: OperatingPoint, window: [f64; 2]) -> Result<f64> {
    Ok(matched_gamma0e_raw(params, op)?.clamp(window[0], window[1]))
}

fn matched_gamma0e_raw(params: &HybridParams, op: OperatingPoint) -> Result<f64> {
    let kappa = params.kappa();
    if kappa <= 0.0 {
        return Err(Error::ZeroDenominator("matched Γ₀e (κ = 0)"));
    }
    let g = params.coupling_at(op)?;
    Ok(4.0 * g * g / kappa - params.gamma_minus - 2.0 * params.gamma_phi)
}

/// Parameters a landscape axis may sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    KappaC,
    KappaI,
    G0,
    GammaMinus,
    GammaPhi,
    TC,
    FC,
}

impl SweepParam {
    pub fn key(self) -> &'static str {
        match self {
            SweepParam::KappaC => "kappa_c",
            SweepParam::KappaI => "kappa_i",
            SweepParam::G0 => "g0",
            SweepParam::GammaMinus => "gamma_minus",
            SweepParam::GammaPhi => "gamma_phi",
            SweepParam::TC => "t_c",
            SweepParam::FC => "f_c",
        }
    }

    fn apply(self, p: &mut HybridParams, v: f64) {
        match self {
            SweepParam::KappaC => p.kappa_c = v,
            SweepParam::KappaI => p.kappa_i = v,
            SweepParam::G0 => p.g0 = v,
            SweepParam::GammaMinus => p.gamma_minus = v,
            SweepParam::GammaPhi => p.gamma_phi = v,
            SweepParam::TC => p.t_c = v,
            SweepParam::FC => p.f_c = v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub param: SweepParam,
    #[serde(rename = "start_hz")]
    pub start: f64,
    #[serde(rename = "stop_hz")]
    pub stop: f64,
    pub points: usize,
}

impl SweepAxis {
    pub fn new(param: SweepParam, start: f64, stop: f64, points: usize) -> Self {
        Self { param, start, stop, points }
    }

    pub fn values(&self) -> Vec<f64> {
        linspace(self.start, self.stop, self.points)
    }
}

fn default_window() -> [f64; 2] {
    GAMMA0E_WINDOW
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis1: SweepAxis,
    pub axis2: SweepAxis,
    pub fixed: HybridParams,
    pub branch: Branch,
    #[serde(default = "default_window", rename = "gamma0e_window_hz")]
    pub gamma0e_window: [f64; 2],
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.axis1.param == self.axis2.param {
            return Err(Error::invalid("axis2", "must sweep a different parameter than axis1"));
        }
        for (name, a) in [("axis1", &self.axis1), ("axis2", &self.axis2)] {
            if a.points == 0 || !(a.start.is_finite() && a.stop.is_finite()) || a.start < 0.0 || a.stop < 0.0 {
                return Err(Error::invalid(name, "needs ≥ 1 point over a finite non-negative range"));
            }
        }
        if self.branch == Branch::Zero {
            return Err(Error::invalid("branch", "must be plus or minus"));
        }
        let [lo, hi] = self.gamma0e_window;
        if !(lo >= 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::invalid("gamma0e_window_hz", "needs 0 ≤ min ≤ max < ∞"));
        }
        self.fixed.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapCell {
    pub axis1: f64,
    pub axis2: f64,
    /// NaN when the cell could not be evaluated.
    pub breakdown: Option<EfficiencyBreakdown>,
    /// Γ₀e hit the window edge, so κ_DQD ≠ κ.
    pub clamped: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl MapCell {
    pub fn eta(&self) -> f64 {
        self.breakdown.map_or(f64::NAN, |b| b.eta)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyMap {
    pub spec: SweepSpec,
    pub axis1_values: Vec<f64>,
    pub axis2_values: Vec<f64>,
    /// Row-major with axis1 as the outer index.
    pub cells: Vec<MapCell>,
    /// Where g and the rates were evaluated.
    pub evaluated_at: String,
}

impl EfficiencyMap {
    pub fn cell(&self, i1: usize, i2: usize) -> &MapCell {
        &self.cells[i1 * self.axis2_values.len() + i2]
    }

    /// Index of the evaluated cell with the largest |η|.
    pub fn argmax(&self) -> Option<usize> {
        (0..self.cells.len())
            .filter(|&i| self.cells[i].breakdown.is_some())
            .max_by(|&a, &b| self.cells[a].eta().abs().total_cmp(&self.cells[b].eta().abs()))
    }
}

fn evaluate_cell(spec: &SweepSpec, a1: f64, a2: f64) -> Result<(EfficiencyBreakdown, bool)> {
    let mut p = spec.fixed;
    spec.axis1.param.apply(&mut p, a1);
    spec.axis2.param.apply(&mut p, a2);
    let delta_r = resonant_detuning(p.f_c, p.t_c)?;
    let op = OperatingPoint::new(spec.branch.sign() * delta_r);
    let raw = matched_gamma0e_raw(&p, op)?;
    let g0e = raw.clamp(spec.gamma0e_window[0], spec.gamma0e_window[1]);
    let b = efficiency_breakdown(&p, op, g0e)?;
    Ok((b, g0e != raw))
}

/// Matched-rate efficiency over a two-parameter grid, evaluated at δ = ±δ_r.
pub fn efficiency_map(spec: &SweepSpec) -> Result<EfficiencyMap> {
    spec.validate()?;
    let v1 = spec.axis1.values();
    let v2 = spec.axis2.values();
    let cells: Vec<MapCell> = (0..v1.len() * v2.len())
        .into_par_iter()
        .map(|k| {
            let (a1, a2) = (v1[k / v2.len()], v2[k % v2.len()]);
            match evaluate_cell(spec, a1, a2) {
                Ok((b, clamped)) => MapCell {
                    axis1: a1,
                    axis2: a2,
                    breakdown: Some(b),
                    clamped,
                    error: None,
                },
                Err(e) => MapCell {
                    axis1: a1,
                    axis2: a2,
                    breakdown: None,
                    clamped: false,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    Ok(EfficiencyMap {
        spec: spec.clone(),
        axis1_values: v1,
        axis2_values: v2,
        cells,
        evaluated_at: format!(
            "delta = {}delta_r (qubit resonant with cavity); Gamma_0e matched so that kappa_DQD = kappa within [{:e}, {:e}] Hz",
            if spec.branch == Branch::Plus { "+" } else { "-" },
            spec.gamma0e_window[0],
            spec.gamma0e_window[1]
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hybrid::presets;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn op_at(p: &HybridParams, branch: Branch) -> OperatingPoint {
        OperatingPoint::resonant(p.f_c, p.t_c, branch).unwrap()
    }

    #[test]
    fn directivity_at_operating_point() {
        let p = presets::table1_3646();
        let d = directivity(&lead_rates(&p, op_at(&p, Branch::Plus)).unwrap()).unwrap();
        assert!((d - 0.8764).abs() < 0.002, "{d}");
        let dr = resonant_detuning(p.f_c, p.t_c).unwrap();
        assert_relative_eq!(d, dr / p.f_c, max_relative = 1e-12);
    }

    #[test]
    fn directivity_vanishes_at_zero_detuning() {
        let p = presets::table1_3646();
        let d = directivity(&lead_rates(&p, OperatingPoint::new(0.0)).unwrap()).unwrap();
        assert!(d.abs() < 1e-15);
    }

    #[test]
    fn directivity_tends_to_one_for_small_tunnel_coupling() {
        let p = HybridParams { t_c: 1.0, ..presets::table1_3646() };
        let d = directivity(&lead_rates(&p, op_at(&p, Branch::Minus)).unwrap()).unwrap();
        assert!((d + 1.0).abs() < 1e-12);
    }

    #[test]
    fn directivity_zero_rates_error() {
        let r = LeadRates { gamma_le: 0.0, gamma_re: 0.0, gamma_gl: 1.0, gamma_gr: 1.0 };
        assert!(matches!(directivity(&r), Err(Error::ZeroDenominator(_))));
    }

    #[test]
    fn operating_point_efficiency() {
        let p = presets::operating_point_3646();
        let b = efficiency_breakdown(&p, op_at(&p, Branch::Minus), presets::GAMMA_0E_3646).unwrap();
        assert!((b.eta_abs() - 0.713).abs() < 0.01, "{b:?}");
        assert!((b.f_in - 0.818).abs() < 0.003);
        assert_eq!(b.f_escape, 1.0);
        assert_eq!(b.polarity(), Polarity::Negative);
        assert_relative_eq!(b.gamma_tot, 1315.5e6, max_relative = 1e-12);
    }

    #[test]
    fn quoted_rates_give_formula_match_factor() {
        let f = impedance_match(32.1e6, 28.1e6).unwrap();
        assert!((f - 0.9956).abs() < 5e-5, "{f}");
        assert_eq!(impedance_match(28.1e6, 28.1e6).unwrap(), 1.0);
    }

    #[test]
    fn matched_rate_sets_unit_match() {
        let p = presets::operating_point_3646();
        let op = op_at(&p, Branch::Minus);
        let p = HybridParams { gamma_minus: 10e6, gamma_phi: 10e6, ..p };
        let g0e = matched_gamma0e(&p, op, GAMMA0E_WINDOW).unwrap();
        assert!((g0e - 1.4781e9).abs() < 0.001e9, "{g0e}");
        let b = efficiency_breakdown(&p, op, g0e).unwrap();
        assert!((b.f_match - 1.0).abs() < 1e-14);
    }

    #[test]
    fn matched_rate_clamps() {
        let p = HybridParams { g0: 0.0, ..presets::landscape_baseline() };
        let op = op_at(&p, Branch::Plus);
        assert_eq!(matched_gamma0e(&p, op, GAMMA0E_WINDOW).unwrap(), 0.0);
        let p = HybridParams { g0: 2e9, ..presets::landscape_baseline() };
        assert_eq!(matched_gamma0e(&p, op, GAMMA0E_WINDOW).unwrap(), 4e9);
        let b = efficiency_breakdown(&p, op, 4e9).unwrap();
        assert!(b.f_match < 1.0);
    }

    #[test]
    fn photocurrent_examples() {
        let p = presets::operating_point_3646();
        let op = op_at(&p, Branch::Minus);
        assert_eq!(photocurrent_linear(0.0, &p, op, 486.2e6).unwrap(), 0.0);
        let n_dot = photon_flux(1e-15, 3.646e9);
        assert_relative_eq!(n_dot, 4.139e8, max_relative = 1e-3);
        assert_relative_eq!(ELEMENTARY_CHARGE * n_dot * 0.677, 4.49e-11, max_relative = 2e-3);
        let i = photocurrent_linear(n_dot, &p, op, 486.2e6).unwrap();
        let b = efficiency_breakdown(&p, op, 486.2e6).unwrap();
        let fom = figures_of_merit(b.eta, p.f_c, 1e-15, 1.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(i.abs() / 1e-15, fom.responsivity, max_relative = 1e-12);
    }

    #[test]
    fn figures_of_merit_examples() {
        let fom = figures_of_merit(0.677, 3.646e9, 50e-15, 5.0, 486.2e6, 972.4e6).unwrap();
        assert!((fom.responsivity / 45e3 - 1.0).abs() < 0.02, "{}", fom.responsivity);
        assert!((fom.nep / 5e-19 - 1.0).abs() < 0.1, "{}", fom.nep);
        assert_relative_eq!(fom.dead_time, 1.0 / 486.2e6 + 1.0 / 972.4e6, max_relative = 1e-15);
        assert!((fom.dead_time - 3.09e-9).abs() < 0.005e-9);
        assert!(figures_of_merit(0.677, -1.0, 50e-15, 5.0, 1.0, 1.0).is_err());
    }

    fn baseline_spec(t_c: f64) -> SweepSpec {
        SweepSpec {
            axis1: SweepAxis::new(SweepParam::KappaC, 5e6, 50e6, 12),
            axis2: SweepAxis::new(SweepParam::G0, 200e6, 400e6, 9),
            fixed: HybridParams { t_c, ..presets::landscape_baseline() },
            branch: Branch::Minus,
            gamma0e_window: GAMMA0E_WINDOW,
        }
    }

    #[test]
    fn map_baseline_cell() {
        let spec = SweepSpec {
            axis1: SweepAxis::new(SweepParam::KappaC, 23e6, 23e6, 1),
            axis2: SweepAxis::new(SweepParam::G0, 213.7e6, 213.7e6, 1),
            ..baseline_spec(presets::T_C)
        };
        let m = efficiency_map(&spec).unwrap();
        let c = m.cell(0, 0);
        assert!(!c.clamped);
        assert!((c.eta().abs() - 0.71).abs() < 0.01, "{}", c.eta());
    }

    #[test]
    fn map_unclamped_cells_are_matched() {
        let m = efficiency_map(&baseline_spec(presets::T_C)).unwrap();
        for c in &m.cells {
            let b = c.breakdown.unwrap();
            if !c.clamped {
                assert!((b.f_match - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn smaller_tunnel_coupling_dominates() {
        let hi = efficiency_map(&baseline_spec(presets::T_C)).unwrap();
        let lo = efficiency_map(&baseline_spec(400e6)).unwrap();
        let mut compared = 0;
        for (a, b) in lo.cells.iter().zip(&hi.cells) {
            if !a.clamped && !b.clamped {
                assert!(a.eta().abs() > b.eta().abs());
                compared += 1;
            }
        }
        assert!(compared > 50);
    }

    #[test]
    fn map_flags_cells_without_resonance() {
        let spec = SweepSpec {
            axis1: SweepAxis::new(SweepParam::TC, 1.0e9, 2.5e9, 4),
            axis2: SweepAxis::new(SweepParam::KappaI, 1e6, 5e6, 2),
            ..baseline_spec(presets::T_C)
        };
        let m = efficiency_map(&spec).unwrap();
        assert!(m.cells.iter().any(|c| c.error.is_some()));
        assert!(m.cells.iter().any(|c| c.breakdown.is_some()));
        assert!(m.cell(3, 0).eta().is_nan());
    }

    #[test]
    fn ideal_limit_approaches_unity() {
        let p = HybridParams { gamma_minus: 0.0, kappa_i: 0.0, t_c: 1e7, g0: 5e9, ..presets::landscape_baseline() };
        let op = op_at(&p, Branch::Plus);
        let g0e = matched_gamma0e(&p, op, [0.0, 1e12]).unwrap();
        let b = efficiency_breakdown(&p, op, g0e).unwrap();
        assert!(b.eta > 0.999, "{b:?}");
    }

    fn symmetric_params() -> impl Strategy<Value = HybridParams> {
        (
            2e9..8e9f64,
            (1e6..60e6f64, 0.0..30e6f64),
            (50e6..500e6f64, 0.05..0.49f64),
            (0.0..50e6f64, 0.0..50e6f64, 1e7..5e9f64),
        )
            .prop_map(|(f_c, (kc, ki), (g0, tc_frac), (gm, gp, gl))| HybridParams {
                f_c,
                kappa_c: kc,
                kappa_i: ki,
                g0,
                t_c: tc_frac * f_c,
                gamma_minus: gm,
                gamma_phi: gp,
                gamma_l: gl,
                gamma_r: gl,
                gamma_tot: None,
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]

        #[test]
        fn match_factor_bounded(a in 0.0..1e9f64, b in 1.0..1e9f64) {
            let f = impedance_match(a, b).unwrap();
            prop_assert!(f <= 1.0);
            prop_assert!(f >= 0.0);
        }

        #[test]
        fn symmetric_directivity_identity(p in symmetric_params(), delta in -1e10..1e10f64) {
            let d = directivity(&lead_rates(&p, OperatingPoint::new(delta)).unwrap()).unwrap();
            prop_assert!(d.abs() <= 1.0);
            let exact = delta.abs() / crate::hybrid::qubit_frequency(delta, p.t_c);
            prop_assert!((d.abs() - exact).abs() <= 1e-12);
        }

        #[test]
        fn branch_antisymmetry(p in symmetric_params(), g0e in 1e6..3e9f64) {
            let plus = efficiency_breakdown(&p, op_at(&p, Branch::Plus), g0e).unwrap();
            let minus = efficiency_breakdown(&p, op_at(&p, Branch::Minus), g0e).unwrap();
            prop_assert!((plus.eta + minus.eta).abs() <= 1e-12 * plus.eta.abs().max(1e-300));
        }

        #[test]
        fn scale_invariance(p in symmetric_params(), g0e in 1e6..3e9f64, lambda in 0.01..100.0f64) {
            let op = op_at(&p, Branch::Plus);
            let a = efficiency_breakdown(&p, op, g0e).unwrap();
            let b = efficiency_breakdown(&p.scaled(lambda), OperatingPoint::new(op.delta * lambda), g0e * lambda).unwrap();
            prop_assert!((a.eta - b.eta).abs() <= 1e-12);
        }
    }
}
