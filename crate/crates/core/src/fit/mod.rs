//! Nonlinear least-squares estimation of cavity and qubit parameters from reflection
//! spectra: single-trace bare-cavity extraction and simultaneous multi-spectrum hybrid
//! fits with shared qubit parameters and per-cavity-setting rates.

mod bare;
pub mod lm;
mod problem;
mod synth;

pub use bare::{fit_bare_cavity, BareCavityFit, Trace};
pub use lm::{LmOptions, Termination};
pub use problem::{
    fit_lm, residuals, Dataset, DatasetStats, FitInit, FitModelSpec, FitProblem, FitResult, FittedParameter,
    InitValue, ParamName, ParamRole, ParamSpec, ResidualMode, SpectrumValues, Transform,
};
pub use synth::{synthesize_spectrum, Grid};
