use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the library can report. The leading phrase of each message
/// is the stable error name surfaced by the command-line front end.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("integrability error: {0}")]
    Integrability(String),

    #[error("empty-sample error: the sample contains no observations")]
    EmptySample,

    #[error("degenerate-curvature error: curvature score {score:e} is too small for a finite AMISE bandwidth")]
    DegenerateCurvature { score: f64 },

    #[error("type error: {0}")]
    TypeMismatch(String),

    #[error("invalid-point error: {0}")]
    InvalidPoint(String),

    #[error("degenerate-weights error: {0}")]
    DegenerateWeights(String),

    #[error("empty-window error: no observation has positive kernel weight at x = {x}")]
    EmptyWindow { x: f64 },

    #[error("singular-design error at x = {x}: sigma2 = {sigma2:e}")]
    SingularDesign { x: f64, sigma2: f64 },

    #[error("unsupported-model error: {0}")]
    UnsupportedModel(String),

    #[error("no-valid-bandwidth error: every bandwidth failed on every fold")]
    NoValidBandwidth,

    #[error("experiment-invalid error: {0}")]
    ExperimentInvalid(String),

    #[error("invalid-config error: {0}")]
    InvalidConfig(String),

    #[error("parse error: {message}, row {row}, column {column}")]
    Parse {
        message: String,
        row: u64,
        column: String,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-friendly name, e.g. `"empty-sample"`.
    pub fn name(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Integrability(_) => "integrability",
            Error::EmptySample => "empty-sample",
            Error::DegenerateCurvature { .. } => "degenerate-curvature",
            Error::TypeMismatch(_) => "type",
            Error::InvalidPoint(_) => "invalid-point",
            Error::DegenerateWeights(_) => "degenerate-weights",
            Error::EmptyWindow { .. } => "empty-window",
            Error::SingularDesign { .. } => "singular-design",
            Error::UnsupportedModel(_) => "unsupported-model",
            Error::NoValidBandwidth => "no-valid-bandwidth",
            Error::ExperimentInvalid(_) => "experiment-invalid",
            Error::InvalidConfig(_) => "invalid-config",
            Error::Parse { .. } => "parse",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub(crate) fn check_bandwidth(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("bandwidth must be positive and finite, got {h}")))
    }
}
