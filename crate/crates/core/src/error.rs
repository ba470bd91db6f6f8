use thiserror::Error;

/// Errors raised by the numerical core and the scenario runner.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension {dim}: need at least {min}")]
    InvalidDimension { dim: usize, min: usize },

    #[error("shape mismatch: {left} vs {right}")]
    Shape { left: usize, right: usize },

    #[error("structure error: {0}")]
    Structure(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular metric: {0}")]
    SingularMetric(String),

    #[error("metric domain error: {0}")]
    MetricDomain(String),

    #[error("no preimage: {0}")]
    NoPreimage(String),

    #[error("constraint singularity: Phi^2 + chi = {value:e}")]
    ConstraintSingularity { value: f64 },

    #[error("non-real phase: |Im W| = {im_w:e} at t = {t}")]
    NonRealPhase { im_w: f64, t: f64 },

    #[error("guard '{guard}' tripped at t = {t}: {detail}")]
    Guard { guard: String, t: f64, detail: String },

    #[error("integration instability at t = {t}")]
    Instability { t: f64 },

    #[error("insufficient stencil at grid index {index}")]
    Stencil { index: usize },

    #[error("non-normalizable regime: {0}")]
    NonNormalizable(String),

    #[error("quadrature domain error: {0}")]
    QuadratureDomain(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("validation error in '{field}': {message}")]
    Validation { field: String, message: String },

    #[error("format error: {0}")]
    Format(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// CLI exit status: 2 for input and format problems, 3 for numerical
    /// guards and failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } | Error::Validation { .. } | Error::Format(_) | Error::Io(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
