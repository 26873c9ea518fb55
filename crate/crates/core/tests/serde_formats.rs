use dqd_core::efficiency::{SweepAxis, SweepParam, SweepSpec, GAMMA0E_WINDOW};
use dqd_core::fit::{synthesize_spectrum, Dataset, FitInit, Grid, InitValue, LmOptions, ParamName, ResidualMode};
use dqd_core::hybrid::presets;
use dqd_core::oracle::OracleModel;
use dqd_core::reflectance::{linspace, spectrum_2d};
use dqd_core::{Branch, ComplexSpectrum, HybridParams, OperatingPoint, SusceptibilityModel};
use serde_json::json;

#[test]
fn hybrid_params_use_unit_suffixed_keys() {
    let v = serde_json::to_value(presets::table1_3646()).unwrap();
    for key in [
        "f_c_hz", "kappa_c_hz", "kappa_i_hz", "g0_hz", "t_c_hz", "gamma_minus_hz", "gamma_phi_hz", "gamma_l_hz",
        "gamma_r_hz", "gamma_tot_hz",
    ] {
        assert!(v.get(key).is_some(), "{key}");
    }
    let back: HybridParams = serde_json::from_value(v).unwrap();
    assert_eq!(back, presets::table1_3646());
    let no_total = serde_json::to_value(presets::landscape_baseline()).unwrap();
    assert!(no_total.get("gamma_tot_hz").is_none());
}

#[test]
fn unknown_keys_are_rejected() {
    let mut v = serde_json::to_value(presets::table1_3646()).unwrap();
    v["kappa_hz"] = json!(1.0);
    let err = serde_json::from_value::<HybridParams>(v).unwrap_err().to_string();
    assert!(err.contains("kappa_hz"), "{err}");

    let spec = SweepSpec {
        axis1: SweepAxis::new(SweepParam::KappaC, 5e6, 50e6, 3),
        axis2: SweepAxis::new(SweepParam::TC, 300e6, 900e6, 3),
        fixed: presets::landscape_baseline(),
        branch: Branch::Plus,
        gamma0e_window: GAMMA0E_WINDOW,
    };
    let mut v = serde_json::to_value(&spec).unwrap();
    assert_eq!(v["axis2"]["param"], "t_c");
    assert!(v["axis1"].get("start_hz").is_some());
    assert_eq!(serde_json::from_value::<SweepSpec>(v.clone()).unwrap(), spec);
    v["axis1"]["step_hz"] = json!(1.0);
    assert!(serde_json::from_value::<SweepSpec>(v).is_err());
}

#[test]
fn operating_point_carries_branch_label() {
    let v = serde_json::to_value(OperatingPoint::new(-2e9)).unwrap();
    assert_eq!(v, json!({"delta_hz": -2e9, "branch": "minus"}));
    let op: OperatingPoint = serde_json::from_value(json!({"delta_hz": 1.5e9})).unwrap();
    assert_eq!(op.branch(), Branch::Plus);
}

#[test]
fn dataset_and_spectrum_roundtrip_exactly() {
    let p = presets::table1_3032();
    let grid = Grid {
        f_d_axis: linspace(p.f_c - 50e6, p.f_c + 50e6, 9),
        delta_axis: linspace(-2e9, 2e9, 5),
    };
    for mode in [ResidualMode::Complex, ResidualMode::Magnitude] {
        let ds = synthesize_spectrum("x", &p, SusceptibilityModel::FullRabi, &grid, 0.02, mode, 5).unwrap();
        let back: Dataset = serde_json::from_str(&serde_json::to_string(&ds).unwrap()).unwrap();
        assert_eq!(back, ds);
    }
    let spec = spectrum_2d(&p, &grid.delta_axis, &grid.f_d_axis, SusceptibilityModel::JaynesCummings).unwrap();
    let back: ComplexSpectrum = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
    assert_eq!(back, spec);
}

#[test]
fn fit_inputs_parse_from_json() {
    let init: FitInit = serde_json::from_value(json!({
        "g0_hz": 2e8,
        "kappa_c_hz": [2.2e7, 2.3e7, 1.8e7],
        "amplitude": 1.0
    }))
    .unwrap();
    assert_eq!(init[&ParamName::G0], InitValue::Scalar(2e8));
    assert_eq!(init[&ParamName::KappaC], InitValue::PerDataset(vec![2.2e7, 2.3e7, 1.8e7]));
    assert!(serde_json::from_value::<FitInit>(json!({"g_hz": 1.0})).is_err());

    let lm: LmOptions = serde_json::from_value(json!({"max_iter": 50})).unwrap();
    assert_eq!(lm.max_iter, 50);
    assert_eq!(lm.ftol, LmOptions::default().ftol);
    assert!(serde_json::from_value::<LmOptions>(json!({"maxiter": 50})).is_err());
}

#[test]
fn oracle_model_roundtrip() {
    let params = HybridParams { f_c: 3.646e9, ..presets::landscape_baseline() };
    let m = OracleModel {
        params,
        op: OperatingPoint::resonant(params.f_c, params.t_c, Branch::Minus).unwrap(),
        gamma_0e: 1.2e9,
        n_max: 6,
        f_d: params.f_c,
        n_dot: 1e5,
    };
    let v = serde_json::to_value(m).unwrap();
    assert!(v.get("n_dot_per_s").is_some() && v.get("gamma_0e_hz").is_some());
    assert_eq!(serde_json::from_value::<OracleModel>(v).unwrap(), m);
}
