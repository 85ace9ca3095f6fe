use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid law: {0}")]
    InvalidLaw(String),

    #[error("derivative order {requested} exceeds the cap of {cap}")]
    OrderCap { requested: usize, cap: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("target {target} outside the attainable range ({low}, {high})")]
    OutOfRange { target: f64, low: f64, high: f64 },

    #[error("{0}")]
    Degenerate(String),

    #[error("inconsistent moments: {0}")]
    InconsistentMoments(String),

    #[error("parameters not identifiable: {0}")]
    NonIdentifiable(String),

    #[error("no convergence after {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("time {t} lies beyond the simulated horizon {end}")]
    BeyondHorizon { t: f64, end: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("config error{}: {key}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Config {
        line: Option<usize>,
        key: String,
        message: String,
    },

    #[error("malformed input at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
