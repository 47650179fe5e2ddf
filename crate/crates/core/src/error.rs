use std::path::PathBuf;

use serde::Serialize;
use thiserror::Error;

/// Diagnostics attached to a failed Newton solve.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct IterateDiagnostics {
    pub s: f64,
    pub iter: usize,
    pub residual_sup: f64,
    pub min_eigen_omega: f64,
    pub step_length: f64,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {left} vs {right}")]
    GridMismatch { left: String, right: String },

    #[error("axis {axis} out of range for complex dimension {dim}")]
    AxisOutOfRange { axis: usize, dim: usize },

    #[error("non-finite sample at index {index}")]
    NonFinite { index: usize },

    #[error("weight is negative ({value:e}) at index {index}")]
    NegativeWeight { index: usize, value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("metric not positive definite: min eigenvalue {eigenvalue:e} at index {index} (x = {coords:?})")]
    Positivity {
        index: usize,
        coords: Vec<f64>,
        eigenvalue: f64,
    },

    #[error("density violates compatibility: mean of e^F - 1 is {defect:e}")]
    Incompatible { defect: f64 },

    #[error("positivity lost during line search: {0:?}")]
    PositivityLoss(IterateDiagnostics),

    #[error("line search could not reduce the residual: {0:?}")]
    LineSearchStall(IterateDiagnostics),

    #[error("Newton iteration limit reached: {0:?}")]
    MaxIterations(IterateDiagnostics),

    #[error("linear solve stagnated at relative residual {relative_residual:e} after {iterations} iterations")]
    LinearSolveStagnation {
        iterations: usize,
        relative_residual: f64,
        at: IterateDiagnostics,
    },

    #[error("cutoff radius {r} exceeds the admissible maximum 0.25")]
    RadiusTooLarge { r: f64 },

    #[error("density normalization infeasible: {0}")]
    NormalizationInfeasible(String),

    #[error("density must be positive on the grid; found {value:e} at index {index}")]
    NonPositiveDensity { index: usize, value: f64 },

    #[error("root find failed: {0}")]
    RootFind(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("snapshot error: {0}")]
    Snapshot(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
