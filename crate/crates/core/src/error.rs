use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("Laplace transform not integrable at t = {t}")]
    NonIntegrable { t: f64 },
    #[error("quadrature failed to reach tolerance: {0}")]
    QuadratureFailure(String),
    #[error("fractional index {alpha} outside (0, 50]")]
    GammaRangeError { alpha: f64 },
    #[error("measure has no mass at or below s0 = {s0}")]
    EmptyMeasure { s0: f64 },
    #[error("head Laplace integral vanishes at split point {split}")]
    EmptyHead { split: f64 },
    #[error("invalid potential parameters: {0}")]
    InvalidParameters(String),
    #[error("Monte-Carlo acceptance rate {rate:.3e} below 1e-4 (bounding region too loose)")]
    DegenerateAcceptance { rate: f64 },
    #[error("grid too coarse: {points} points per axis (need >= 16)")]
    GridTooCoarse { points: usize },
    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),
    #[error("eigensolver did not converge: {0}")]
    ConvergenceFailure(String),
    #[error("no eigenvalue passed two-grid validation")]
    TrustWindowEmpty,
    #[error("lambda = {lam} lies above the trusted window (lambda_trust = {trust})")]
    UntrustedRange { lam: f64, trust: f64 },
    #[error("heat-trace tail not certified at t = {t}, hbar = {hbar}")]
    TailNotCertified { t: f64, hbar: f64 },
    #[error("config error in `{field}`: {message}")]
    ConfigError { field: String, message: String },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::ConfigError {
            field: field.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
