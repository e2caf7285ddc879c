use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("port error: {0}")]
    Port(String),

    /// `I - S_cc F` has no usable inverse: a lossless bound state traps light.
    #[error("singular closure: reciprocal condition {rcond:.3e} on internal ports [{ports}] (lossless resonance)")]
    SingularClosure { rcond: f64, ports: String },

    #[error("degenerate phase point (phi1, phi2) = ({phi1}, {phi2}): |B - 1| = {distance:.3e} (resonant trap)")]
    DegeneratePhase {
        phi1: f64,
        phi2: f64,
        distance: f64,
    },

    #[error("target T = {target} unreachable: curve spans [{min}, {max}]")]
    TargetUnreachable { target: f64, min: f64, max: f64 },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
