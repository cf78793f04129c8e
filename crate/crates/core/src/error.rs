use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid {width}x{height} is too small (need at least {min}x{min})")]
    GridTooSmall {
        width: usize,
        height: usize,
        min: usize,
    },
    #[error("invalid grid spacing dx={dx}, dy={dy}")]
    BadSpacing { dx: f64, dy: f64 },
    #[error("dimension mismatch: expected {expected:?}, got {got:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("non-finite value at pixel ({x}, {y})")]
    NonFinite { x: usize, y: usize },
    #[error("intensity {value} at pixel ({x}, {y}) outside [0, 1]")]
    IntensityRange { x: usize, y: usize, value: f64 },
    #[error("poisson's ratio {0} outside [0, 0.5)")]
    PoissonRatio(f64),
    #[error("pixel ({x}, {y}) lies on the outer ring but is not dirichlet")]
    RingNotDirichlet { x: usize, y: usize },
    #[error("prescribed magnitude {magnitude} exceeds cap {cap}")]
    MagnitudeCap { magnitude: f64, cap: f64 },
    #[error("handle at ({x}, {y}) lies outside the grid")]
    HandleOutside { x: usize, y: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("conjugate gradients did not converge in {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("right-hand side contains non-finite values")]
    NonFiniteRhs,
    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },
    #[error("{path}: {error}")]
    Io {
        path: PathBuf,
        error: std::io::Error,
    },
    #[error("{path}: {error}")]
    Json {
        path: PathBuf,
        error: serde_json::Error,
    },
    #[error("empty input: {0}")]
    Empty(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            error: source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }
}
