use std::fs;
use std::path::{Path, PathBuf};

use dqd_core::efficiency::{
    efficiency_breakdown, efficiency_map, figures_of_merit, matched_gamma0e, EfficiencyMap, SweepSpec,
};
use dqd_core::fit::{
    fit_bare_cavity, Dataset, FitModelSpec, FitProblem, FitResult, ResidualMode, SpectrumValues, Trace,
};
use dqd_core::hybrid::lead_rates;
use dqd_core::oracle::{efficiency_oracle, OracleModel};
use dqd_core::rabi::{bloch_siegert_shift, converge_cutoff, transition_spectrum, TruncatedHilbert};
use dqd_core::reflectance::{linspace, spectrum_2d};
use dqd_core::stark::{fit_beta_with, synthesize_stark, CalibrationOptions, StarkDataset};
use dqd_core::SusceptibilityModel;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{
    self, CalibrateConfig, DatasetRef, EfficiencyConfig, EigenConfig, FitConfig, Loaded, OracleConfig,
    SpectrumConfig, SynthConfig, Validate,
};
use crate::error::{as_config, CliError};
use crate::io::{self, csv_string, fmt_f64, Outputs};
use crate::plot::{emit_plot, Grid, Labels, PlotData, PlotKind, Series};
use crate::Format;

/// Shared state of one invocation.
pub struct Ctx {
    pub config_path: Option<PathBuf>,
    pub seed_flag: Option<u64>,
    pub format: Format,
    pub out: Outputs,
    pub seed: u64,
    pub config_sha256: Option<String>,
    pub warnings: Vec<String>,
}

impl Ctx {
    fn load<T>(&mut self, default: Option<fn() -> T>) -> Result<Loaded<T>, CliError>
    where
        T: DeserializeOwned + Serialize + Validate,
    {
        let loaded = config::load(self.config_path.as_deref(), default)?;
        self.config_sha256 = Some(loaded.sha256.clone());
        Ok(loaded)
    }

    fn plot(&mut self, name: &str, data: &PlotData, kind: PlotKind, labels: Labels) -> Result<(), CliError> {
        let path = self.out.dir().join(name);
        emit_plot(data, &path, kind, &labels)?;
        self.out.record(path);
        Ok(())
    }
}

fn cells_csv(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    csv_string(header, rows.into_iter().map(|r| r.into_iter().map(fmt_f64).collect()))
}

pub fn spectrum(ctx: &mut Ctx) -> Result<Value, CliError> {
    let cfg: SpectrumConfig = ctx.load(Some(SpectrumConfig::default))?.value;
    let spec = spectrum_2d(&cfg.params, &cfg.delta_axis.values(), &cfg.f_d_axis.values(), cfg.model)?;
    if !spec.failed.is_empty() {
        ctx.warnings.push(format!("{} grid cells could not be evaluated and are NaN", spec.failed.len()));
    }
    match ctx.format {
        Format::Csv => {
            let ds = Dataset::from_spectrum("spectrum", &spec);
            ctx.out.write("spectrum.csv", io::spectrum_csv(&ds).as_bytes())?;
        }
        Format::Json => {
            ctx.out.write_json("spectrum.json", &spec)?;
        }
    }
    let mags = spec.magnitudes();
    let grid = Grid {
        x: spec.f_d_axis.iter().map(|f| f / 1e9).collect(),
        y: spec.delta_axis.iter().map(|d| d / 1e9).collect(),
        z: mags.clone(),
    };
    ctx.plot(
        "spectrum.svg",
        &PlotData::Grid(grid),
        PlotKind::Heatmap,
        Labels {
            title: format!("|S11| ({:?})", cfg.model),
            x: "drive frequency f_d (GHz)".into(),
            y: "detuning δ (GHz)".into(),
            z: "|S11|".into(),
        },
    )?;
    let min = (0..mags.len())
        .filter(|&i| mags[i].is_finite())
        .min_by(|&a, &b| mags[a].total_cmp(&mags[b]));
    let n_fd = spec.f_d_axis.len();
    Ok(json!({
        "points": mags.len(),
        "failed_cells": spec.failed.len(),
        "min_s11_mag": min.map(|i| mags[i]),
        "min_at_f_d_hz": min.map(|i| spec.f_d_axis[i % n_fd]),
        "min_at_delta_hz": min.map(|i| spec.delta_axis[i / n_fd]),
    }))
}

pub fn eigen(ctx: &mut Ctx) -> Result<Value, CliError> {
    let cfg: EigenConfig = ctx.load(Some(EigenConfig::default))?.value;
    let (n_max, source) = match cfg.n_max {
        Some(n) => (n, "config"),
        None => (converge_cutoff(&cfg.params, cfg.cutoff_tol)?, "converged"),
    };
    let hilbert = TruncatedHilbert::new(n_max).map_err(as_config)?;
    let es = transition_spectrum(&cfg.params, &cfg.delta_axis.values(), hilbert, cfg.model)?;
    let bs = bloch_siegert_shift(&cfg.params, hilbert)?;

    let width = es.transitions.iter().map(Vec::len).max().unwrap_or(0);
    match ctx.format {
        Format::Csv => {
            let levels = es.delta_axis.iter().zip(&es.levels).flat_map(|(d, lv)| {
                lv.iter().enumerate().map(move |(k, e)| vec![fmt_f64(*d), k.to_string(), fmt_f64(*e)])
            });
            ctx.out.write("levels.csv", csv_string(&["delta_hz", "level_index", "energy_hz"], levels).as_bytes())?;
            let trans = es.delta_axis.iter().zip(&es.transitions).flat_map(|(d, tr)| {
                tr.iter().enumerate().map(move |(k, e)| vec![fmt_f64(*d), k.to_string(), fmt_f64(*e)])
            });
            ctx.out.write(
                "transitions.csv",
                csv_string(&["delta_hz", "transition_index", "energy_hz"], trans).as_bytes(),
            )?;
        }
        Format::Json => {
            ctx.out.write_json("eigenspectrum.json", &es)?;
        }
    }

    let x: Vec<f64> = es.delta_axis.iter().map(|d| d / 1e9).collect();
    let mut series: Vec<Series> = (0..width)
        .map(|k| Series {
            name: format!("transition {k}"),
            x: x.clone(),
            y: es.transitions.iter().map(|t| t.get(k).map_or(f64::NAN, |e| e / 1e9)).collect(),
        })
        .collect();
    series.push(Series {
        name: "cavity f_c".into(),
        x: x.clone(),
        y: vec![cfg.params.f_c / 1e9; x.len()],
    });
    ctx.plot(
        "transitions.svg",
        &PlotData::Traces(series),
        PlotKind::Lines,
        Labels {
            title: format!("transitions ({:?}, n_max = {n_max})", cfg.model),
            x: "detuning δ (GHz)".into(),
            y: "transition frequency (GHz)".into(),
            z: String::new(),
        },
    )?;
    Ok(json!({
        "n_max": n_max,
        "cutoff_source": source,
        "model": cfg.model,
        "bloch_siegert_shift_hz": bs,
        "detuning_points": es.delta_axis.len(),
    }))
}

pub fn efficiency(ctx: &mut Ctx) -> Result<Value, CliError> {
    let cfg: EfficiencyConfig = ctx.load(Some(EfficiencyConfig::default))?.value;
    let op = cfg.operating_point.resolve(&cfg.params)?;
    let (gamma_0e, source) = match cfg.gamma_0e_hz {
        Some(v) => (v, "config"),
        None => (matched_gamma0e(&cfg.params, op, cfg.gamma0e_window_hz)?, "matched"),
    };
    let b = efficiency_breakdown(&cfg.params, op, gamma_0e)?;
    let fom = match cfg.figures_of_merit {
        Some(f) => {
            let rates = lead_rates(&cfg.params, op)?;
            let fom = figures_of_merit(b.eta, cfg.params.f_c, f.current_noise_a, f.bandwidth_hz, gamma_0e, rates.gamma_g0())?;
            Some(json!({
                "responsivity_a_per_watt": fom.responsivity,
                "nep_watt_per_sqrt_hz": fom.nep,
                "dead_time_s": fom.dead_time,
            }))
        }
        None => None,
    };
    let summary = json!({
        "eta": b.eta.abs(),
        "eta_signed": b.eta,
        "polarity": b.polarity(),
        "f_in": b.f_in,
        "f_match": b.f_match,
        "f_escape": b.f_escape,
        "f_dir": b.f_dir,
        "g_hz": b.g,
        "gamma_tot_hz": b.gamma_tot,
        "kappa_dqd_hz": b.kappa_dqd,
        "gamma_0e_hz": gamma_0e,
        "gamma_0e_source": source,
        "delta_hz": op.delta,
        "figures_of_merit": fom,
    });
    match ctx.format {
        Format::Csv => {
            let row = vec![b.eta, b.f_in, b.f_match, b.f_escape, b.f_dir, b.g, b.gamma_tot, b.kappa_dqd, gamma_0e, op.delta];
            let header = [
                "eta", "f_in", "f_match", "f_escape", "f_dir", "g_hz", "gamma_tot_hz", "kappa_dqd_hz", "gamma_0e_hz",
                "delta_hz",
            ];
            ctx.out.write("efficiency.csv", cells_csv(&header, [row]).as_bytes())?;
        }
        Format::Json => {
            ctx.out.write_json("efficiency.json", &summary)?;
        }
    }
    Ok(summary)
}

/// Column header of the efficiency-map CSV.
pub const MAP_HEADER: [&str; 8] = ["axis1", "axis2", "eta", "f_in", "f_match", "f_escape", "f_dir", "clamped_flag"];

fn map_csv(map: &EfficiencyMap) -> String {
    let rows = map.cells.iter().map(|c| {
        let b = c.breakdown;
        let get = |f: fn(&dqd_core::efficiency::EfficiencyBreakdown) -> f64| b.as_ref().map_or(f64::NAN, f);
        vec![
            fmt_f64(c.axis1),
            fmt_f64(c.axis2),
            fmt_f64(c.eta()),
            fmt_f64(get(|b| b.f_in)),
            fmt_f64(get(|b| b.f_match)),
            fmt_f64(get(|b| b.f_escape)),
            fmt_f64(get(|b| b.f_dir)),
            u8::from(c.clamped).to_string(),
        ]
    });
    csv_string(&MAP_HEADER, rows)
}

pub fn sweep(ctx: &mut Ctx) -> Result<Value, CliError> {
    let spec: SweepSpec = ctx.load(Some(config::default_sweep))?.value;
    let map = efficiency_map(&spec)?;
    let failed = map.cells.iter().filter(|c| c.breakdown.is_none()).count();
    let clamped = map.cells.iter().filter(|c| c.clamped).count();
    if failed > 0 {
        ctx.warnings.push(format!("{failed} map cells could not be evaluated and are NaN"));
    }
    match ctx.format {
        Format::Csv => {
            ctx.out.write("efficiency_map.csv", map_csv(&map).as_bytes())?;
        }
        Format::Json => {
            ctx.out.write_json("efficiency_map.json", &map)?;
        }
    }
    let (k1, k2) = (spec.axis1.param.key(), spec.axis2.param.key());
    ctx.plot(
        "efficiency_map.svg",
        &PlotData::Grid(Grid {
            x: map.axis2_values.iter().map(|v| v / 1e6).collect(),
            y: map.axis1_values.iter().map(|v| v / 1e6).collect(),
            z: map.cells.iter().map(|c| c.eta().abs()).collect(),
        }),
        PlotKind::Heatmap,
        Labels {
            title: format!("|η| at δ = {:?} δ_r, matched Γ₀e", spec.branch),
            x: format!("{k2} (MHz)"),
            y: format!("{k1} (MHz)"),
            z: "|η|".into(),
        },
    )?;
    let best = map.argmax().map(|i| {
        let c = &map.cells[i];
        json!({ "index": i, "axis1_hz": c.axis1, "axis2_hz": c.axis2, "eta": c.eta().abs(), "eta_signed": c.eta() })
    });
    Ok(json!({
        "axis1": k1,
        "axis2": k2,
        "cells": map.cells.len(),
        "failed_cells": failed,
        "clamped_cells": clamped,
        "evaluated_at": map.evaluated_at,
        "max": best,
    }))
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

pub fn calibrate(ctx: &mut Ctx) -> Result<Value, CliError> {
    let loaded: Loaded<CalibrateConfig> = ctx.load(None)?;
    let cfg = loaded.value;
    let points = match &cfg.points_csv {
        Some(p) => io::load_stark_csv(&resolve(&loaded.base_dir, p))?,
        None => cfg.points.clone(),
    };
    let dataset = StarkDataset {
        points,
        context: cfg.context,
    };
    let result = fit_beta_with(
        &dataset,
        CalibrationOptions {
            free_intercept: cfg.free_intercept,
        },
    )?;
    ctx.warnings.extend(result.warnings.iter().cloned());
    ctx.out.write_json("calibration.json", &result)?;
    Ok(json!({
        "beta": result.beta,
        "beta_sigma": result.beta_sigma,
        "slope_hz_per_watt": result.slope,
        "chi_hz": result.chi,
        "points": dataset.points.len(),
    }))
}

fn load_dataset(base: &Path, r: &DatasetRef) -> Result<Dataset, CliError> {
    let path = resolve(base, &r.path);
    let mut ds = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        let bytes = fs::read(&path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        serde_json::from_slice::<Dataset>(&bytes).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?
    } else {
        io::load_spectrum_csv(&path)?
    };
    if let Some(label) = &r.label {
        ds.label = label.clone();
    }
    if let Some(s) = r.sigma {
        ds = ds.with_uniform_sigma(s);
    }
    ds.validate()
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    Ok(ds)
}

fn parameters_csv(fit: &FitResult) -> String {
    let rows = fit.parameters.iter().map(|p| {
        vec![
            p.name.key().to_string(),
            p.dataset.clone().unwrap_or_default(),
            fmt_f64(p.value),
            fmt_f64(p.std_error),
            p.fixed.to_string(),
        ]
    });
    csv_string(&["parameter", "dataset", "value", "std_error", "fixed"], rows)
}

fn fit_summary(fit: &FitResult) -> Value {
    let params: Vec<Value> = fit
        .parameters
        .iter()
        .map(|p| json!({ "name": p.name, "dataset": p.dataset, "value": p.value, "std_error": p.std_error }))
        .collect();
    json!({
        "converged": fit.converged,
        "termination": fit.termination,
        "iterations": fit.iterations,
        "reduced_chi2": fit.reduced_chi2,
        "parameters": params,
    })
}

pub fn fit(ctx: &mut Ctx) -> Result<Value, CliError> {
    let loaded: Loaded<FitConfig> = ctx.load(None)?;
    let cfg = loaded.value;
    let datasets = cfg
        .datasets
        .iter()
        .map(|r| load_dataset(&loaded.base_dir, r))
        .collect::<Result<Vec<_>, _>>()?;
    let mode = cfg.residual_mode.unwrap_or_else(|| io::residual_mode_of(&datasets[0]));

    if cfg.model == SusceptibilityModel::BareCavity && cfg.parameters.is_none() {
        let mut results = Vec::new();
        for ds in &datasets {
            if ds.delta_axis.len() != 1 {
                return Err(CliError::config(format!(
                    "dataset `{}`: a bare-cavity fit needs a single detuning row, got {}",
                    ds.label,
                    ds.delta_axis.len()
                )));
            }
            let trace = match (&ds.values, mode) {
                (SpectrumValues::Complex(v), ResidualMode::Complex) => Trace::Complex(v.clone()),
                (SpectrumValues::Complex(v), ResidualMode::Magnitude) => Trace::Magnitude(v.iter().map(|z| z.norm()).collect()),
                (SpectrumValues::Magnitude(v), _) => Trace::Magnitude(v.clone()),
            };
            let r = fit_bare_cavity(&ds.f_d_axis, &trace)?;
            if r.regime_ambiguous {
                ctx.warnings.push(format!(
                    "dataset `{}`: magnitude data cannot separate κ_c from κ_i; the overcoupled branch is reported",
                    ds.label
                ));
            }
            if r.kappa_i_at_bound {
                ctx.warnings.push(format!("dataset `{}`: κ_i reached its lower bound", ds.label));
            }
            results.push(json!({ "label": ds.label, "result": r }));
        }
        ctx.out.write_json("fit_result.json", &results)?;
        let summary: Vec<Value> = results
            .iter()
            .map(|r| {
                let b = &r["result"];
                json!({
                    "label": r["label"],
                    "f_c_hz": b["f_c"],
                    "kappa_c_hz": b["kappa_c"],
                    "kappa_i_hz": b["kappa_i"],
                    "overcoupled": b["overcoupled"],
                })
            })
            .collect();
        return Ok(json!({ "model": "bare_cavity", "datasets": summary }));
    }

    let spec = match cfg.parameters {
        Some(parameters) => FitModelSpec {
            model: cfg.model,
            residual_mode: mode,
            parameters,
        },
        None => FitModelSpec::hybrid(cfg.model, mode),
    };
    let problem = FitProblem::new(spec, datasets, &cfg.init).map_err(as_config)?;
    let result = problem.fit(&cfg.lm)?;
    if !result.converged {
        ctx.warnings
            .push(format!("fit stopped after {} iterations without converging", result.iterations));
    }
    ctx.out.write_json("fit_result.json", &result)?;
    if ctx.format == Format::Csv {
        ctx.out.write("fit_parameters.csv", parameters_csv(&result).as_bytes())?;
    }
    Ok(fit_summary(&result))
}

pub fn oracle(ctx: &mut Ctx) -> Result<Value, CliError> {
    let cfg: OracleConfig = ctx.load(Some(OracleConfig::default))?.value;
    let op = cfg.operating_point.resolve(&cfg.params)?;
    let gamma_0e = match cfg.gamma_0e_hz {
        Some(v) => v,
        None => matched_gamma0e(&cfg.params, op, cfg.gamma0e_window_hz)?,
    };
    let base = OracleModel {
        params: cfg.params,
        op,
        gamma_0e,
        n_max: cfg.n_max,
        f_d: cfg.f_d_hz.unwrap_or(cfg.params.f_c),
        n_dot: cfg.n_dot_list_per_s[0],
    };
    base.validate().map_err(as_config)?;
    let result = efficiency_oracle(&base, &cfg.n_dot_list_per_s)?;
    let analytic = efficiency_breakdown(&cfg.params, op, gamma_0e)?.eta;
    let deviation = (result.eta_num - analytic).abs() / analytic.abs();
    if deviation > 0.05 {
        ctx.warnings
            .push(format!("numerical and closed-form η differ by {:.2}%", 100.0 * deviation));
    }
    let summary = json!({
        "eta_num": result.eta_num,
        "eta_analytic": analytic,
        "relative_deviation": deviation,
        "linearity_residual": result.linearity_residual,
        "n_max": cfg.n_max,
        "gamma_0e_hz": gamma_0e,
        "delta_hz": op.delta,
    });
    match ctx.format {
        Format::Csv => {
            let rows = result
                .points
                .iter()
                .map(|p| vec![p.n_dot, p.current, p.n_c, p.p_e, p.p_0, p.residual, p.min_eigenvalue]);
            let header = ["n_dot_per_s", "current_a", "n_c", "p_e", "p_0", "residual", "min_eigenvalue"];
            ctx.out.write("oracle_points.csv", cells_csv(&header, rows).as_bytes())?;
        }
        Format::Json => {
            ctx.out.write_json("oracle.json", &json!({ "summary": summary, "points": result.points }))?;
        }
    }
    Ok(summary)
}

pub fn synth(ctx: &mut Ctx) -> Result<Value, CliError> {
    let cfg: SynthConfig = ctx.load(Some(SynthConfig::default))?.value;
    ctx.seed = ctx.seed_flag.or(cfg.seed()).unwrap_or(0);
    match cfg {
        SynthConfig::Spectrum(c) => {
            let mut refs = Vec::new();
            for (k, d) in c.datasets.iter().enumerate() {
                let grid = dqd_core::fit::Grid {
                    f_d_axis: linspace(d.params.f_c - c.f_d_half_span_hz, d.params.f_c + c.f_d_half_span_hz, c.f_d_points),
                    delta_axis: c.delta_axis.values(),
                };
                let ds = dqd_core::fit::synthesize_spectrum(
                    d.label.clone(),
                    &d.params,
                    c.model,
                    &grid,
                    c.noise_sigma,
                    c.residual_mode,
                    ctx.seed.wrapping_add(k as u64),
                )?;
                let name = match ctx.format {
                    Format::Csv => {
                        let name = format!("synth_{}.csv", d.label);
                        ctx.out.write(&name, io::spectrum_csv(&ds).as_bytes())?;
                        name
                    }
                    Format::Json => {
                        let name = format!("synth_{}.json", d.label);
                        ctx.out.write_json(&name, &ds)?;
                        name
                    }
                };
                refs.push(DatasetRef {
                    path: PathBuf::from(name),
                    label: Some(d.label.clone()),
                    sigma: (c.noise_sigma > 0.0).then_some(c.noise_sigma),
                });
            }
            ctx.out.write_json("truth.json", &c.datasets)?;
            let fit_cfg = FitConfig {
                model: c.model,
                residual_mode: Some(c.residual_mode),
                datasets: refs,
                init: config::synth_init(&c.datasets, 1.05),
                parameters: None,
                lm: Default::default(),
            };
            ctx.out.write_json("fit_config.json", &fit_cfg)?;
            Ok(json!({
                "kind": "spectrum",
                "datasets": c.datasets.len(),
                "points_per_dataset": c.delta_axis.points * c.f_d_points,
                "noise_sigma": c.noise_sigma,
            }))
        }
        SynthConfig::Stark(c) => {
            let ds = synthesize_stark(c.beta, c.context, &c.powers_watt, c.rel_noise, ctx.seed)?;
            match ctx.format {
                Format::Csv => {
                    ctx.out.write("synth_stark.csv", io::stark_csv(&ds.points).as_bytes())?;
                }
                Format::Json => {
                    ctx.out.write_json("synth_stark.json", &ds)?;
                }
            }
            let cal = CalibrateConfig {
                context: c.context,
                points: ds.points.clone(),
                points_csv: None,
                free_intercept: false,
            };
            ctx.out.write_json("calibrate_config.json", &cal)?;
            Ok(json!({ "kind": "stark", "beta": c.beta, "points": ds.points.len(), "rel_noise": c.rel_noise }))
        }
    }
}
