//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::time::{Duration, Instant};

use dqd_core::constants::{ELEMENTARY_CHARGE, PLANCK};
use dqd_core::efficiency::{
    directivity, efficiency_breakdown, efficiency_map, figures_of_merit, matched_gamma0e, SweepAxis, SweepParam,
    SweepSpec, GAMMA0E_WINDOW,
};
use dqd_core::fit::{
    fit_bare_cavity, synthesize_spectrum, FitInit, FitModelSpec, FitProblem, Grid, InitValue, LmOptions, ParamName,
    ResidualMode, Trace,
};
use dqd_core::hybrid::{
    effective_coupling, kappa_dqd, lead_rates, presets, qubit_frequency, resonant_detuning, Branch, HybridParams,
    OperatingPoint,
};
use dqd_core::oracle::{efficiency_oracle, solve, OracleModel, POSITIVITY_TOL, RESIDUAL_TOL, TRACE_TOL};
use dqd_core::rabi::{bloch_siegert_shift, build_hamiltonian, eigenlevels, CouplingModel, TruncatedHilbert};
use dqd_core::reflectance::{linspace, s11, SusceptibilityModel};
use dqd_core::stark::{fit_beta, synthesize_stark, StarkContext};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Smallest wall time over `reps` runs.
fn min_time<T>(reps: usize, mut f: impl FnMut() -> T) -> (T, Duration) {
    let mut best = Duration::MAX;
    let mut out = None;
    for _ in 0..reps {
        let t = Instant::now();
        let v = f();
        best = best.min(t.elapsed());
        out = Some(v);
    }
    (out.unwrap(), best)
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn rel(x: f64, target: f64) -> f64 {
    ((x - target) / target).abs()
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

fn resonant(p: &HybridParams, b: Branch) -> OperatingPoint {
    OperatingPoint::resonant(p.f_c, p.t_c, b).unwrap()
}

fn ac1_efficiency() -> Outcome {
    let p = presets::operating_point_3646();
    let op = resonant(&p, Branch::Minus);
    let (b, t) = min_time(1000, || efficiency_breakdown(&p, op, presets::GAMMA_0E_3646).unwrap());
    let pass = within(b.eta_abs(), 0.713, 0.010)
        && within(b.f_in, 0.818, 0.003)
        && b.f_escape == 1.0
        && t < Duration::from_millis(1);
    outcome(
        pass,
        format!("eta = {:.4}, f_in = {:.4}, f_match = {:.4}, f_dir = {:.4}, t = {:?}", b.eta_abs(), b.f_in, b.f_match, b.f_dir.abs(), t),
    )
}

fn ac2_directivity() -> Outcome {
    let p = presets::table1_3646();
    let d = directivity(&lead_rates(&p, resonant(&p, Branch::Plus)).unwrap()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let f_c = rng.random_range(1e9..10e9);
        let t_c = rng.random_range(0.01..0.499) * f_c;
        let gamma = rng.random_range(1e6..1e10);
        let q = HybridParams { f_c, t_c, gamma_l: gamma, gamma_r: gamma, ..p };
        let branch = if rng.random_bool(0.5) { Branch::Plus } else { Branch::Minus };
        let dq = directivity(&lead_rates(&q, resonant(&q, branch)).unwrap()).unwrap();
        let exact = resonant_detuning(f_c, t_c).unwrap() / f_c;
        worst = worst.max((dq.abs() - exact).abs());
    }
    outcome(
        within(d.abs(), 0.877, 0.002) && worst <= 1e-12,
        format!("|D| = {:.5}, identity max error over 1e4 draws = {worst:.2e}", d.abs()),
    )
}

fn ac3_rate_algebra() -> Outcome {
    let p = presets::table1_3646();
    let dr = resonant_detuning(p.f_c, p.t_c).unwrap();
    let g = effective_coupling(p.g0, -dr, p.t_c).unwrap();
    let kappa_dqd_minus = 32.1e6;
    let gamma_tot = 4.0 * g * g / kappa_dqd_minus;
    let gamma_0e = gamma_tot - presets::GAMMA_TOT_3646;
    let roundtrip = kappa_dqd(g, gamma_tot).unwrap();
    outcome(
        rel(gamma_tot, 1315.5e6) <= 0.01 && rel(gamma_0e, 486.2e6) <= 0.01 && rel(roundtrip, kappa_dqd_minus) < 1e-12,
        format!("g = {:.2} MHz, Gamma_tot = {:.1} MHz, Gamma_0e = {:.1} MHz", g / 1e6, gamma_tot / 1e6, gamma_0e / 1e6),
    )
}

fn ac4_figures_of_merit() -> Outcome {
    let p = presets::table1_3646();
    let r = lead_rates(&p, resonant(&p, Branch::Minus)).unwrap();
    let fom = figures_of_merit(0.677, 3.646e9, 50e-15, 5.0, r.gamma_0e(), r.gamma_g0()).unwrap();
    let r_expected = ELEMENTARY_CHARGE * 0.677 / (PLANCK * 3.646e9);
    outcome(
        rel(fom.responsivity, 45e3) <= 0.02
            && rel(fom.nep, 5e-19) <= 0.10
            && rel(fom.responsivity, r_expected) < 1e-14
            && within(fom.dead_time, 3.09e-9, 0.005e-9),
        format!(
            "R = {:.2} kA/W, NEP = {:.3e} W/sqrt(Hz), dead time = {:.3} ns (quoted as < 3 ns; 1/Gamma_0e + 1/Gamma_g0 gives 3.09 ns)",
            fom.responsivity / 1e3,
            fom.nep,
            fom.dead_time * 1e9
        ),
    )
}

fn map_spec(t_c: f64, n1: usize, n2: usize) -> SweepSpec {
    SweepSpec {
        axis1: SweepAxis::new(SweepParam::KappaC, 5e6, 50e6, n1),
        axis2: SweepAxis::new(SweepParam::G0, 200e6, 400e6, n2),
        fixed: HybridParams { t_c, ..presets::landscape_baseline() },
        branch: Branch::Minus,
        gamma0e_window: GAMMA0E_WINDOW,
    }
}

fn ac5_map() -> Outcome {
    let single = SweepSpec {
        axis1: SweepAxis::new(SweepParam::KappaC, 23e6, 23e6, 1),
        axis2: SweepAxis::new(SweepParam::G0, 213.7e6, 213.7e6, 1),
        ..map_spec(presets::T_C, 1, 1)
    };
    let base = efficiency_map(&single).unwrap();
    let eta = base.cell(0, 0).eta().abs();
    let (hi, t) = min_time(3, || efficiency_map(&map_spec(presets::T_C, 100, 100)).unwrap());
    let lo = efficiency_map(&map_spec(400e6, 100, 100)).unwrap();
    let mut compared = 0;
    let mut violations = 0;
    for (a, b) in lo.cells.iter().zip(&hi.cells) {
        if !a.clamped && !b.clamped && a.breakdown.is_some() && b.breakdown.is_some() {
            compared += 1;
            if a.eta().abs() <= b.eta().abs() {
                violations += 1;
            }
        }
    }
    outcome(
        within(eta, 0.71, 0.01) && !base.cell(0, 0).clamped && compared > 0 && violations == 0 && t < Duration::from_secs(5),
        format!("baseline eta = {eta:.4}; t_c = 400 MHz dominates at {compared} matched cells ({violations} violations); 100x100 map in {t:?}"),
    )
}

fn ac6_eigenspectrum() -> Outcome {
    let start = Instant::now();
    let p = presets::table1_3646();
    let f_q = 2.0 * p.t_c;
    let n_max = 10;
    let levels = eigenlevels(&build_hamiltonian(
        CouplingModel::JaynesCummings,
        p.f_c,
        f_q,
        p.g0,
        TruncatedHilbert::new(n_max).unwrap(),
    ))
    .unwrap();
    let delta = f_q - p.f_c;
    let mut worst_split = 0.0f64;
    for n in 0..n_max {
        let split = (delta * delta + 4.0 * p.g0 * p.g0 * (n + 1) as f64).sqrt();
        let mid = (n as f64 + 0.5) * p.f_c;
        let nearest = |e: f64| *levels.iter().min_by(|a, b| (*a - e).abs().total_cmp(&(*b - e).abs())).unwrap();
        let got = nearest(mid + split / 2.0) - nearest(mid - split / 2.0);
        worst_split = worst_split.max(rel(got, split));
    }
    let hilbert = TruncatedHilbert::new(12).unwrap();
    let shift = bloch_siegert_shift(&p, hilbert).unwrap();
    let estimate = p.g0 * p.g0 / (f_q + p.f_c);
    let pts: Vec<(f64, f64)> = (0..5)
        .map(|k| {
            let g0 = p.g0 / 2f64.powi(k);
            (g0.ln(), bloch_siegert_shift(&HybridParams { g0, ..p }, hilbert).unwrap().ln())
        })
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|q| q.0).sum::<f64>() / n;
    let my = pts.iter().map(|q| q.1).sum::<f64>() / n;
    let exponent = pts.iter().map(|q| (q.0 - mx) * (q.1 - my)).sum::<f64>() / pts.iter().map(|q| (q.0 - mx).powi(2)).sum::<f64>();
    let t = start.elapsed();
    outcome(
        worst_split <= 1e-10 && shift > 0.0 && rel(shift, estimate) <= 0.15 && (exponent - 2.0).abs() <= 0.1 && t < Duration::from_secs(1),
        format!(
            "JC split error {worst_split:.2e}; Bloch-Siegert {:.3} MHz vs estimate {:.3} MHz; exponent {exponent:.4}; t = {t:?}",
            shift / 1e6,
            estimate / 1e6
        ),
    )
}

fn ac7_fits() -> Outcome {
    let start = Instant::now();
    let p = presets::table1_3646();
    let f = linspace(p.f_c - 100e6, p.f_c + 100e6, 401);
    let op = OperatingPoint::new(0.0);
    let trace: Vec<_> = f.iter().map(|&fd| s11(fd, &p, op, SusceptibilityModel::BareCavity).unwrap()).collect();
    let bare = fit_bare_cavity(&f, &Trace::Complex(trace)).unwrap();
    let bare_err = rel(bare.f_c, p.f_c).max(rel(bare.kappa_c, p.kappa_c)).max(rel(bare.kappa_i, p.kappa_i));

    let truth = presets::shared_fit_truth();
    let grids: Vec<Grid> = truth
        .iter()
        .map(|(_, q)| Grid {
            f_d_axis: linspace(q.f_c - 150e6, q.f_c + 150e6, 61),
            delta_axis: linspace(-5e9, 5e9, 81),
        })
        .collect();
    let per = |f: &dyn Fn(&HybridParams) -> f64| InitValue::PerDataset(truth.iter().map(|(_, q)| f(q)).collect());
    let init = FitInit::from([
        (ParamName::G0, InitValue::Scalar(213.7e6 * 1.1)),
        (ParamName::TunnelCoupling, InitValue::Scalar(878e6 * 0.9)),
        (ParamName::GammaTot, InitValue::Scalar(829.3e6 * 1.2)),
        (ParamName::CavityFrequency, per(&|q| q.f_c + 1e6)),
        (ParamName::KappaC, per(&|q| q.kappa_c * 0.9)),
        (ParamName::KappaI, per(&|q| q.kappa_i * 1.2)),
    ]);
    let mut errs: [Vec<f64>; 3] = [vec![], vec![], vec![]];
    let mut failures = 0;
    for seed in 0..20u64 {
        let datasets = truth
            .iter()
            .zip(&grids)
            .enumerate()
            .map(|(k, ((label, q), grid))| {
                synthesize_spectrum(label.clone(), q, SusceptibilityModel::FullRabi, grid, 0.01, ResidualMode::Magnitude, seed * 3 + k as u64)
            })
            .collect::<Result<Vec<_>, _>>()
            .unwrap();
        let spec = FitModelSpec::hybrid(SusceptibilityModel::FullRabi, ResidualMode::Magnitude);
        let problem = FitProblem::new(spec, datasets, &init).unwrap();
        match problem.fit(&LmOptions::default()) {
            Ok(r) => {
                errs[0].push(rel(r.value(ParamName::G0, None).unwrap(), 213.7e6));
                errs[1].push(rel(r.value(ParamName::TunnelCoupling, None).unwrap(), 878e6));
                errs[2].push(rel(r.value(ParamName::GammaTot, None).unwrap(), 829.3e6));
            }
            Err(_) => {
                failures += 1;
                for e in errs.iter_mut() {
                    e.push(f64::INFINITY);
                }
            }
        }
    }
    let [mg, mt, mgam] = errs.map(median);
    let t = start.elapsed();
    outcome(
        bare_err <= 1e-6 && mg <= 0.02 && mt <= 0.02 && mgam <= 0.02 && t < Duration::from_secs(60),
        format!(
            "bare max rel error {bare_err:.2e}; median rel error over 20 seeds g0 {mg:.2e}, t_c {mt:.2e}, Gamma_tot {mgam:.2e} ({failures} failed fits); t = {t:?}"
        ),
    )
}

fn ac8_stark() -> Outcome {
    let start = Instant::now();
    let ctx = StarkContext::table2_3644();
    let beta = 0.62e-9;
    let powers: Vec<f64> = (1..=10).map(|k| k as f64 * 5e-8).collect();
    let exact = fit_beta(&synthesize_stark(beta, ctx, &powers, 0.0, 0).unwrap()).unwrap();
    let estimates: Vec<f64> = (0..100u64)
        .map(|seed| fit_beta(&synthesize_stark(beta, ctx, &powers, 0.05, seed).unwrap()).unwrap().beta)
        .collect();
    let med = median(estimates);
    let t = start.elapsed();
    outcome(
        rel(exact.beta, beta) <= 1e-10 && rel(med, beta) <= 0.03 && t < Duration::from_secs(5),
        format!("noiseless rel error {:.2e}; 5% noise median beta = {:.4e} ({:.2}%); t = {t:?}", rel(exact.beta, beta), med, 100.0 * rel(med, beta)),
    )
}

fn oracle_configs(n_max: usize) -> Vec<(&'static str, OracleModel)> {
    let baseline = HybridParams { f_c: 3.646e9, ..presets::landscape_baseline() };
    let op_b = resonant(&baseline, Branch::Minus);
    let table = presets::operating_point_3646();
    let op_t = resonant(&table, Branch::Minus);
    vec![
        (
            "matched baseline",
            OracleModel {
                params: baseline,
                op: op_b,
                gamma_0e: matched_gamma0e(&baseline, op_b, GAMMA0E_WINDOW).unwrap(),
                n_max,
                f_d: baseline.f_c,
                n_dot: 1e5,
            },
        ),
        (
            "3646 operating point",
            OracleModel {
                params: table,
                op: op_t,
                gamma_0e: presets::GAMMA_0E_3646,
                n_max,
                f_d: table.f_c,
                n_dot: 1e5,
            },
        ),
    ]
}

fn ac9_oracle() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    let fluxes = [1e5, 2e5, 4e5];
    for n_max in [6, 10] {
        for (name, m) in oracle_configs(n_max) {
            let closed = efficiency_breakdown(&m.params, m.op, m.gamma_0e).unwrap().eta;
            let oracle = efficiency_oracle(&m, &fluxes).unwrap();
            let dev = rel(oracle.eta_num, closed);
            let mut inv_ok = true;
            let rates = m.lead_rates().unwrap();
            for &n_dot in &fluxes {
                let ss = solve(&OracleModel { n_dot, ..m }).unwrap();
                let balance = (rates.gamma_0e() * ss.p_e - rates.gamma_g0() * ss.p_0).abs();
                inv_ok &= (ss.trace - 1.0).abs() <= TRACE_TOL
                    && ss.min_eigenvalue >= -POSITIVITY_TOL
                    && ss.residual <= RESIDUAL_TOL * ss.l_norm
                    && balance <= 1e-9 * rates.gamma_0e() * ss.p_e;
            }
            pass &= dev <= 0.05 && inv_ok;
            parts.push(format!("{name} n_max={n_max}: eta_num {:.4} vs {:.4} ({:.2}%)", oracle.eta_num, closed, 100.0 * dev));
        }
    }
    let m = oracle_configs(6).remove(0).1;
    let (_, t6) = min_time(3, || solve(&m).unwrap());
    let m10 = OracleModel { n_max: 10, ..m };
    let (_, t10) = min_time(3, || solve(&m10).unwrap());
    pass &= t6 < Duration::from_millis(500) && t10 < Duration::from_millis(500);
    parts.push(format!("solve n_max=6 {t6:?}, n_max=10 {t10:?}"));
    outcome(pass, parts.join("; "))
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

fn ac10_identities() -> Outcome {
    let start = Instant::now();
    let cases = 10_000;
    let runner = || TestRunner::new(Config { cases, failure_persistence: None, ..Config::default() });
    let mut results: Vec<(&str, Result<(), String>)> = Vec::new();

    results.push((
        "dip depth",
        runner().run(&symmetric_params(), |p| {
            let s = s11(p.f_c, &p, OperatingPoint::new(0.0), SusceptibilityModel::BareCavity).unwrap();
            let expected = (p.kappa_c - p.kappa_i).abs() / p.kappa();
            prop_assert!((s.norm() - expected).abs() <= 1e-12);
            Ok(())
        })
        .map_err(|e| e.to_string()),
    ));
    results.push((
        "delta_r inversion",
        runner().run(&(1e9..10e9f64, 0.001..0.4999f64), |(f_c, frac)| {
            let t_c = frac * f_c;
            let dr = resonant_detuning(f_c, t_c).unwrap();
            prop_assert!((qubit_frequency(dr, t_c) - f_c).abs() <= 1e-12 * f_c);
            prop_assert!((qubit_frequency(-dr, t_c) - f_c).abs() <= 1e-12 * f_c);
            Ok(())
        })
        .map_err(|e| e.to_string()),
    ));
    results.push((
        "scale invariance",
        runner().run(&(symmetric_params(), 1e6..3e9f64, 0.01..100.0f64), |(p, g0e, lambda)| {
            let op = resonant(&p, Branch::Plus);
            let a = efficiency_breakdown(&p, op, g0e).unwrap();
            let b = efficiency_breakdown(&p.scaled(lambda), OperatingPoint::new(op.delta * lambda), g0e * lambda).unwrap();
            prop_assert!((a.eta - b.eta).abs() <= 1e-12);
            Ok(())
        })
        .map_err(|e| e.to_string()),
    ));
    results.push((
        "branch antisymmetry",
        runner().run(&(symmetric_params(), 1e6..3e9f64), |(p, g0e)| {
            let plus = efficiency_breakdown(&p, resonant(&p, Branch::Plus), g0e).unwrap();
            let minus = efficiency_breakdown(&p, resonant(&p, Branch::Minus), g0e).unwrap();
            prop_assert!((plus.eta + minus.eta).abs() <= 1e-12);
            Ok(())
        })
        .map_err(|e| e.to_string()),
    ));
    let t = start.elapsed();
    let failed: Vec<String> = results
        .iter()
        .filter_map(|(name, r)| r.as_ref().err().map(|e| format!("{name}: {e}")))
        .collect();
    outcome(
        failed.is_empty() && t < Duration::from_secs(10),
        if failed.is_empty() {
            format!("4 properties x {cases} cases; t = {t:?}")
        } else {
            failed.join("; ")
        },
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("AC1 efficiency reproduction", ac1_efficiency),
        ("AC2 directivity", ac2_directivity),
        ("AC3 rate algebra", ac3_rate_algebra),
        ("AC4 figures of merit", ac4_figures_of_merit),
        ("AC5 efficiency map", ac5_map),
        ("AC6 eigenspectrum", ac6_eigenspectrum),
        ("AC7 fitter roundtrips", ac7_fits),
        ("AC8 Stark calibration", ac8_stark),
        ("AC9 oracle equivalence", ac9_oracle),
        ("AC10 analytic identities", ac10_identities),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let o = f();
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
