use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("map parameters are not invertible: {0}")]
    NonInvertibleParameters(String),

    #[error("no hyperbolic splitting visible over a window of {window} steps")]
    DegenerateSplitting { window: usize },

    #[error("sequence is empty")]
    EmptySequence,

    #[error("thresholds must satisfy alpha1 < alpha2 < alpha3, got ({0}, {1}, {2})")]
    BadOrdering(f64, f64, f64),

    #[error("t must exceed 19/20, got {0}")]
    TTooSmall(f64),

    #[error("t must be below 1, got {0}")]
    TTooLarge(f64),

    #[error("s = {s} lies outside the open interval ({lo}, {hi})")]
    SOutOfRange { s: f64, lo: f64, hi: f64 },

    #[error("side condition fails for index {index}: log margin {margin}")]
    SideConditionViolated { index: usize, margin: f64 },

    #[error("angle bound eta = {0} is outside (0, 1)")]
    DegenerateAngleBound(f64),

    #[error("invalid map bounds: alpha = {alpha}, beta = {beta}")]
    InvalidBounds { alpha: f64, beta: f64 },

    #[error("exponent estimate not converged: residual {residual} >= {limit}")]
    NotConverged { residual: f64, limit: f64 },

    #[error("precondition not met: {0}")]
    PreconditionNotMet(&'static str),

    #[error(
        "orbit of length {orbit_length} is too short for window {window} and horizon {horizon}"
    )]
    OrbitTooShort {
        orbit_length: usize,
        window: usize,
        horizon: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
