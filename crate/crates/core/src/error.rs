use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("undefined mixing angle: detuning and tunnel coupling are both zero")]
    UndefinedMixingAngle,

    #[error("qubit minimum above cavity: 2·t_c = {two_tc:.6e} Hz exceeds f_c = {f_c:.6e} Hz")]
    NoResonanceCrossing { f_c: f64, two_tc: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("zero denominator in {0}")]
    ZeroDenominator(&'static str),

    #[error("dispersive regime violated: qubit and cavity frequencies coincide")]
    DispersiveDegenerate,

    #[error("matrix is not Hermitian (max asymmetry {0:.3e})")]
    NotHermitian(f64),

    #[error("eigen decomposition failed")]
    EigenFailure,

    #[error("Fock cutoff did not converge below n_max = {0}")]
    CutoffNotConverged(usize),

    #[error("no resonance found in trace")]
    NoResonance,

    #[error("fit did not converge: {reason} (residual norm {residual_norm:.4e})")]
    NotConverged { reason: String, residual_norm: f64 },

    #[error("ill-conditioned fit: {0}")]
    IllConditioned(String),

    #[error("unidentifiable: {0}")]
    Unidentifiable(String),

    #[error("model evaluation failed at dataset `{dataset}` point {index}: {source}")]
    ModelEvaluation {
        dataset: String,
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("degenerate dataset: {0}")]
    DegenerateData(String),

    #[error("inconsistent dispersive sign: fitted slope {slope:.4e} Hz/W has the opposite sign of χ = {chi:.4e} Hz")]
    InconsistentDispersiveSign { slope: f64, chi: f64 },

    #[error("steady state solve failed: {0}")]
    SteadyState(String),

    #[error("outside linear regime: relative deviation {0:.3} exceeds 5%")]
    OutsideLinearRegime(f64),
}

impl Error {
    pub(crate) fn invalid(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }
}
