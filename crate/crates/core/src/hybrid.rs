//! Parameter container and closed-form derived quantities of the DQD–cavity system.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Full physical parameter set. Every field is an ordinary frequency in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HybridParams {
    /// Cavity resonance frequency.
    #[serde(rename = "f_c_hz")]
    pub f_c: f64,
    /// Cavity–feedline coupling rate.
    #[serde(rename = "kappa_c_hz")]
    pub kappa_c: f64,
    /// Internal cavity loss rate.
    #[serde(rename = "kappa_i_hz")]
    pub kappa_i: f64,
    /// Charge–photon coupling at zero detuning.
    #[serde(rename = "g0_hz")]
    pub g0: f64,
    /// Inter-dot tunnel coupling t_c/h.
    #[serde(rename = "t_c_hz")]
    pub t_c: f64,
    /// Inter-dot relaxation rate.
    #[serde(rename = "gamma_minus_hz")]
    pub gamma_minus: f64,
    /// Pure dephasing rate.
    #[serde(rename = "gamma_phi_hz")]
    pub gamma_phi: f64,
    /// Left dot–reservoir tunneling rate.
    #[serde(rename = "gamma_l_hz")]
    pub gamma_l: f64,
    /// Right dot–reservoir tunneling rate.
    #[serde(rename = "gamma_r_hz")]
    pub gamma_r: f64,
    /// Total qubit decoherence rate as extracted from spectroscopy. When absent the
    /// reflectance model assembles it from `gamma_minus`, `gamma_phi` and the lead rates.
    #[serde(rename = "gamma_tot_hz", default, skip_serializing_if = "Option::is_none")]
    pub gamma_tot: Option<f64>,
}

impl HybridParams {
    /// Total cavity linewidth κ = κ_c + κ_i.
    pub fn kappa(&self) -> f64 {
        self.kappa_c + self.kappa_i
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("f_c_hz", self.f_c),
            ("kappa_c_hz", self.kappa_c),
            ("kappa_i_hz", self.kappa_i),
            ("g0_hz", self.g0),
            ("t_c_hz", self.t_c),
            ("gamma_minus_hz", self.gamma_minus),
            ("gamma_phi_hz", self.gamma_phi),
            ("gamma_l_hz", self.gamma_l),
            ("gamma_r_hz", self.gamma_r),
        ];
        for (name, v) in fields {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(name, format!("must be finite and ≥ 0, got {v}")));
            }
        }
        if let Some(v) = self.gamma_tot {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid("gamma_tot_hz", format!("must be finite and ≥ 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Effective coupling at the given operating point.
    pub fn coupling_at(&self, op: OperatingPoint) -> Result<f64> {
        effective_coupling(self.g0, op.delta, self.t_c)
    }

    /// Qubit decoherence rate Γ_tot used by the susceptibility at `op`.
    pub fn decoherence_rate(&self, op: OperatingPoint) -> Result<f64> {
        match self.gamma_tot {
            Some(v) => Ok(v),
            None => {
                let rates = lead_rates(self, op)?;
                Ok(gamma_tot(self, rates.gamma_0e()))
            }
        }
    }

    /// Returns a copy with every rate and frequency multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            f_c: self.f_c * factor,
            kappa_c: self.kappa_c * factor,
            kappa_i: self.kappa_i * factor,
            g0: self.g0 * factor,
            t_c: self.t_c * factor,
            gamma_minus: self.gamma_minus * factor,
            gamma_phi: self.gamma_phi * factor,
            gamma_l: self.gamma_l * factor,
            gamma_r: self.gamma_r * factor,
            gamma_tot: self.gamma_tot.map(|v| v * factor),
        }
    }
}

/// Sign label of the detuning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Plus,
    Minus,
    Zero,
}

impl Branch {
    pub fn of(delta: f64) -> Self {
        if delta > 0.0 {
            Branch::Plus
        } else if delta < 0.0 {
            Branch::Minus
        } else {
            Branch::Zero
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
            Branch::Zero => 0.0,
        }
    }
}

/// Inter-dot detuning δ/h in Hz. The branch is always derived from the sign.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "OperatingPointRepr", from = "OperatingPointRepr")]
pub struct OperatingPoint {
    pub delta: f64,
}

#[derive(Serialize, Deserialize)]
struct OperatingPointRepr {
    delta_hz: f64,
    #[serde(default, skip_deserializing)]
    branch: Option<Branch>,
}

impl From<OperatingPoint> for OperatingPointRepr {
    fn from(op: OperatingPoint) -> Self {
        Self {
            delta_hz: op.delta,
            branch: Some(op.branch()),
        }
    }
}

impl From<OperatingPointRepr> for OperatingPoint {
    fn from(r: OperatingPointRepr) -> Self {
        Self { delta: r.delta_hz }
    }
}

impl OperatingPoint {
    pub fn new(delta: f64) -> Self {
        Self { delta }
    }

    pub fn branch(&self) -> Branch {
        Branch::of(self.delta)
    }

    /// The resonance point ±δ_r where the qubit matches the cavity.
    pub fn resonant(f_c: f64, t_c: f64, branch: Branch) -> Result<Self> {
        let dr = resonant_detuning(f_c, t_c)?;
        Ok(Self::new(branch.sign() * dr))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixingWeights {
    pub sin_theta: f64,
    pub cos_theta: f64,
}

/// Tunneling rates between the dots and the reservoirs at a given operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeadRates {
    /// Excited state → left reservoir.
    pub gamma_le: f64,
    /// Excited state → right reservoir.
    pub gamma_re: f64,
    /// Left reservoir → ground state (spin factor 2 included).
    pub gamma_gl: f64,
    /// Right reservoir → ground state (spin factor 2 included).
    pub gamma_gr: f64,
}

impl LeadRates {
    pub fn gamma_0e(&self) -> f64 {
        self.gamma_le + self.gamma_re
    }

    pub fn gamma_g0(&self) -> f64 {
        self.gamma_gl + self.gamma_gr
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            gamma_le: self.gamma_le * factor,
            gamma_re: self.gamma_re * factor,
            gamma_gl: self.gamma_gl * factor,
            gamma_gr: self.gamma_gr * factor,
        }
    }
}

/// Charge-qubit transition frequency √(δ² + 4t_c²).
pub fn qubit_frequency(delta: f64, t_c: f64) -> f64 {
    delta.hypot(2.0 * t_c)
}

pub fn mixing_weights(delta: f64, t_c: f64) -> Result<MixingWeights> {
    let e = qubit_frequency(delta, t_c);
    if e == 0.0 {
        return Err(Error::UndefinedMixingAngle);
    }
    Ok(MixingWeights {
        sin_theta: 2.0 * t_c / e,
        cos_theta: -delta / e,
    })
}

/// g = g₀·sin θ.
pub fn effective_coupling(g0: f64, delta: f64, t_c: f64) -> Result<f64> {
    Ok(g0 * mixing_weights(delta, t_c)?.sin_theta)
}

/// Positive detuning δ_r at which the qubit is resonant with the cavity.
pub fn resonant_detuning(f_c: f64, t_c: f64) -> Result<f64> {
    let two_tc = 2.0 * t_c;
    if f_c < two_tc {
        return Err(Error::NoResonanceCrossing { f_c, two_tc });
    }
    Ok(((f_c - two_tc) * (f_c + two_tc)).sqrt())
}

/// Lead rates from the dot-occupation weights w_R = (1 + δ/E)/2, w_L = (1 − δ/E)/2.
pub fn lead_rates(params: &HybridParams, op: OperatingPoint) -> Result<LeadRates> {
    let c = -mixing_weights(op.delta, params.t_c)?.cos_theta;
    let w_r = 0.5 * (1.0 + c);
    let w_l = 0.5 * (1.0 - c);
    Ok(LeadRates {
        gamma_le: params.gamma_l * w_l,
        gamma_re: params.gamma_r * w_r,
        gamma_gl: 2.0 * params.gamma_l * w_r,
        gamma_gr: 2.0 * params.gamma_r * w_l,
    })
}

/// Effective photon absorption rate of the DQD, κ_DQD = 4g²/Γ_tot.
pub fn kappa_dqd(g: f64, gamma_tot: f64) -> Result<f64> {
    if gamma_tot <= 0.0 {
        return Err(Error::ZeroDenominator("kappa_dqd (Γ_tot = 0)"));
    }
    Ok(4.0 * g * g / gamma_tot)
}

/// Γ_tot = Γ₀e + γ₋ + 2γ_φ.
pub fn gamma_tot(params: &HybridParams, gamma_0e: f64) -> f64 {
    gamma_0e + params.gamma_minus + 2.0 * params.gamma_phi
}

/// Parameter columns from the device characterisation at three cavity frequencies.
pub mod presets {
    use super::HybridParams;

    /// Tunnel coupling shared by all three columns.
    pub const T_C: f64 = 878.0e6;
    /// Γ_tot at zero average chemical potential for the 3646 MHz column.
    pub const GAMMA_TOT_3646: f64 = 829.3e6;
    /// Lower bound on Γ₀e at the operating point for the 3646 MHz column.
    pub const GAMMA_0E_3646: f64 = 486.2e6;

    fn column(f_c: f64, kappa: f64, kappa_c: f64, g0: f64, gamma_tot: f64) -> HybridParams {
        HybridParams {
            f_c,
            kappa_c,
            kappa_i: kappa - kappa_c,
            g0,
            t_c: T_C,
            gamma_minus: 0.0,
            // All of Γ_tot − Γ₀e is attributed to dephasing so that f_escape = 1.
            gamma_phi: 0.5 * (gamma_tot - GAMMA_0E_3646),
            gamma_l: GAMMA_0E_3646,
            gamma_r: GAMMA_0E_3646,
            gamma_tot: Some(gamma_tot),
        }
    }

    pub fn table1_3032() -> HybridParams {
        column(3.032e9, 28.6e6, 22.8e6, 183.7e6, 722.2e6)
    }

    pub fn table1_3646() -> HybridParams {
        column(3.646e9, 28.1e6, 23.0e6, 213.7e6, GAMMA_TOT_3646)
    }

    pub fn table1_3872() -> HybridParams {
        column(3.872e9, 25.1e6, 18.3e6, 210.6e6, 893.0e6)
    }

    /// The 3646 MHz column at the detector operating point near the charge triple point.
    /// Γ₀e sits at its lower bound, γ₋ = 0, and the remaining 829.3 MHz of decoherence
    /// is dephasing, so Γ_tot = 1315.5 MHz.
    pub fn operating_point_3646() -> HybridParams {
        HybridParams {
            gamma_phi: 0.5 * GAMMA_TOT_3646,
            gamma_tot: None,
            ..table1_3646()
        }
    }

    /// Ground truth for three-spectrum synthetic fits: per-column cavity rates with
    /// g₀, t_c and Γ_tot of the 3646 MHz column shared by all three.
    pub fn shared_fit_truth() -> Vec<(String, HybridParams)> {
        let shared = |p: HybridParams| HybridParams {
            g0: 213.7e6,
            gamma_tot: Some(GAMMA_TOT_3646),
            ..p
        };
        vec![
            ("3032".to_string(), shared(table1_3032())),
            ("3646".to_string(), shared(table1_3646())),
            ("3872".to_string(), shared(table1_3872())),
        ]
    }

    /// Baseline of the efficiency landscape study: γ₋ = γ_φ = 10 MHz, symmetric leads.
    pub fn landscape_baseline() -> HybridParams {
        HybridParams {
            f_c: 3.645e9,
            kappa_c: 23.0e6,
            kappa_i: 5.1e6,
            g0: 213.7e6,
            t_c: T_C,
            gamma_minus: 10.0e6,
            gamma_phi: 10.0e6,
            gamma_l: 1.0e9,
            gamma_r: 1.0e9,
            gamma_tot: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const TC: f64 = 878.0e6;
    const FC: f64 = 3.646e9;

    #[test]
    fn qubit_frequency_examples() {
        assert_eq!(qubit_frequency(0.0, TC), 1.756e9);
        assert!((qubit_frequency(3.1953e9, TC) - 3.646e9).abs() < 1e5);
        assert_eq!(qubit_frequency(5e9, 0.0), 5e9);
    }

    #[test]
    fn mixing_weight_examples() {
        let w = mixing_weights(0.0, 1e6).unwrap();
        assert_eq!(w.sin_theta, 1.0);
        assert_eq!(w.cos_theta, 0.0);

        let w = mixing_weights(3.1953e9, TC).unwrap();
        assert!((w.sin_theta - 0.4816).abs() < 1e-4);
        assert!((w.cos_theta + 0.8764).abs() < 1e-4);
        let m = mixing_weights(-3.1953e9, TC).unwrap();
        assert!((m.cos_theta - 0.8764).abs() < 1e-4);

        assert_eq!(mixing_weights(0.0, 0.0), Err(Error::UndefinedMixingAngle));
    }

    #[test]
    fn effective_coupling_examples() {
        assert_eq!(effective_coupling(213.7e6, 0.0, TC).unwrap(), 213.7e6);
        let g = effective_coupling(213.7e6, 3.1953e9, TC).unwrap();
        assert!((g - 1.0293e8).abs() < 1e4, "{g}");
        assert_eq!(effective_coupling(1e8, 2e9, 0.0).unwrap(), 0.0);
        assert!(effective_coupling(1e8, 0.0, 0.0).is_err());
    }

    #[test]
    fn resonant_detuning_examples() {
        let dr = resonant_detuning(FC, TC).unwrap();
        assert!((dr - 3.1953e9).abs() < 1e5, "{dr}");
        assert_eq!(resonant_detuning(2.0 * TC, TC).unwrap(), 0.0);
        assert!(matches!(
            resonant_detuning(FC, 2e9),
            Err(Error::NoResonanceCrossing { .. })
        ));
    }

    fn symmetric(gamma: f64) -> HybridParams {
        HybridParams {
            gamma_l: gamma,
            gamma_r: gamma,
            ..presets::table1_3646()
        }
    }

    #[test]
    fn lead_rates_at_plus_resonance() {
        let p = symmetric(1.0);
        let op = OperatingPoint::resonant(FC, TC, Branch::Plus).unwrap();
        let r = lead_rates(&p, op).unwrap();
        assert!((r.gamma_re - 0.9382).abs() < 1e-4);
        assert!((r.gamma_le - 0.0618).abs() < 1e-4);
        assert!((r.gamma_gl - 1.8764).abs() < 1e-4);
        assert!((r.gamma_gr - 0.1236).abs() < 1e-4);
    }

    #[test]
    fn lead_rates_at_symmetric_point() {
        let p = HybridParams {
            gamma_l: 3.0,
            gamma_r: 5.0,
            ..presets::table1_3646()
        };
        let r = lead_rates(&p, OperatingPoint::new(0.0)).unwrap();
        assert_eq!(r.gamma_le, 1.5);
        assert_eq!(r.gamma_re, 2.5);
        assert_eq!(r.gamma_gl, 3.0);
        assert_eq!(r.gamma_gr, 5.0);
        assert_eq!(r.gamma_0e(), 4.0);
    }

    #[test]
    fn kappa_dqd_examples() {
        let k = kappa_dqd(1.0293e8, 1.3155e9).unwrap();
        assert!((k - 32.1e6).abs() / 32.1e6 < 0.02, "{k}");
        assert_eq!(kappa_dqd(0.0, 1e9).unwrap(), 0.0);
        let k = kappa_dqd(1.0293e8, 829.3e6).unwrap();
        assert!((k - 5.11e7).abs() < 1e5, "{k}");
        assert!(kappa_dqd(1.0, 0.0).is_err());
    }

    #[test]
    fn gamma_tot_examples() {
        let mut p = presets::landscape_baseline();
        assert_relative_eq!(gamma_tot(&p, 1478.1e6), 1508.1e6, max_relative = 1e-14);
        p.gamma_minus = 0.0;
        p.gamma_phi = 0.0;
        assert_eq!(gamma_tot(&p, 0.0), 0.0);
        p.gamma_minus = 143.1e6;
        p.gamma_phi = 100.0e6;
        assert_relative_eq!(gamma_tot(&p, 486.2e6), 829.3e6, max_relative = 1e-14);
    }

    #[test]
    fn operating_point_serde_derives_branch() {
        let json = serde_json::to_string(&OperatingPoint::new(-2e9)).unwrap();
        assert!(json.contains("\"branch\":\"minus\""), "{json}");
        let back: OperatingPoint = serde_json::from_str(r#"{"delta_hz": 3.0}"#).unwrap();
        assert_eq!(back.branch(), Branch::Plus);
    }

    #[test]
    fn validate_rejects_negative_rates() {
        let mut p = presets::table1_3646();
        assert!(p.validate().is_ok());
        p.kappa_i = -1.0;
        assert!(p.validate().is_err());
    }

    proptest! {
        #[test]
        fn resonant_detuning_inverts_qubit_frequency(t in 1e6f64..3e9, ratio in 1.0f64..20.0) {
            let f = 2.0 * t * ratio;
            let dr = resonant_detuning(f, t).unwrap();
            let back = qubit_frequency(dr, t);
            prop_assert!(((back - f) / f).abs() < 1e-12);
        }

        #[test]
        fn mixing_weights_are_normalized(d in -1e10f64..1e10, t in 1e3f64..5e9) {
            let w = mixing_weights(d, t).unwrap();
            prop_assert!((w.sin_theta.powi(2) + w.cos_theta.powi(2) - 1.0).abs() < 1e-12);
        }

        #[test]
        fn lead_rate_sums_are_exact(d in -1e10f64..1e10, t in 1e6f64..5e9,
                                    gl in 0.0f64..5e9, gr in 0.0f64..5e9) {
            let p = HybridParams { t_c: t, gamma_l: gl, gamma_r: gr, ..presets::table1_3646() };
            let r = lead_rates(&p, OperatingPoint::new(d)).unwrap();
            prop_assert_eq!(r.gamma_0e(), r.gamma_le + r.gamma_re);
            prop_assert_eq!(r.gamma_g0(), r.gamma_gl + r.gamma_gr);
            let s = lead_rates(&HybridParams { gamma_r: gl, ..p }, OperatingPoint::new(d)).unwrap();
            prop_assert!((s.gamma_g0() - 2.0 * s.gamma_0e()).abs() <= 1e-12 * s.gamma_g0().max(1.0));
        }

        #[test]
        fn coupling_is_even_and_cos_is_odd(d in -1e10f64..1e10, t in 1e6f64..5e9, g0 in 1e6f64..1e9) {
            prop_assert_eq!(effective_coupling(g0, d, t).unwrap(), effective_coupling(g0, -d, t).unwrap());
            prop_assert_eq!(mixing_weights(d, t).unwrap().cos_theta, -mixing_weights(-d, t).unwrap().cos_theta);
        }

        #[test]
        fn derived_quantities_scale_homogeneously(g in 1e6f64..1e9, gt in 1e6f64..5e9, lambda in 0.01f64..100.0) {
            let a = kappa_dqd(lambda * g, lambda * gt).unwrap();
            let b = lambda * kappa_dqd(g, gt).unwrap();
            prop_assert!(((a - b) / b).abs() < 1e-12);
            let f = 3e9; let t = 0.5e9;
            let ra = resonant_detuning(lambda * f, lambda * t).unwrap();
            prop_assert!((ra / (lambda * resonant_detuning(f, t).unwrap()) - 1.0).abs() < 1e-12);
        }
    }
}
