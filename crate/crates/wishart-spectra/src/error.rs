//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("eigenvalue {value} at index {index} is not positive")]
    NonPositiveEigenvalue { index: usize, value: f64 },

    #[error("symmetry index must be 1 or 2, got {0}")]
    BadBeta(u32),

    #[error("{what}: expected length {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("p = {p} > n = {n}: dual density has negative point mass; regime unsupported")]
    PGreaterThanN { p: usize, n: usize },

    #[error("eigenvalues {a} and {b} are degenerate at relative gap {gap:.3e} (< {gap_floor:.1e})")]
    DegenerateEigenvalues {
        a: f64,
        b: f64,
        gap: f64,
        gap_floor: f64,
    },

    #[error("density {value:.6e} at x = {x} is negative beyond tolerance {tol:.1e}; precision exhausted")]
    NegativeDensity { x: f64, value: f64, tol: f64 },

    #[error("eigenvalue-splitting extrapolation did not contract (last changes {0:.3e}, {1:.3e})")]
    ExtrapolationDiverged(f64, f64),

    #[error("prefactor is singular: {0}")]
    SingularPrefactor(&'static str),

    #[error("log-domain overflow: exponent {0:.3e}")]
    Overflow(f64),

    #[error("|a*b| = {0:.3e} below floor {1:.1e}: kernel diverges logarithmically at 0")]
    ZeroArgument(f64, f64),

    #[error("square-root branch continuation failed: {0}")]
    BranchTrackingFailure(&'static str),

    #[error("quadrature did not converge: {what} (last change {change:.3e}, tolerance {tol:.3e})")]
    NotConverged {
        what: &'static str,
        change: f64,
        tol: f64,
    },

    #[error("dimensions p = {p}, n = {n} exceed the cost guard for {what} (limit {limit})")]
    CostGuard {
        what: &'static str,
        p: usize,
        n: usize,
        limit: usize,
    },

    #[error("eigensolver failed to converge after {0} sweeps")]
    EigSolverFailure(usize),

    #[error("histogram range is empty or contains no samples")]
    EmptyRange,

    #[error("density curves have disjoint supports; no comparison possible")]
    DisjointSupports,

    #[error("method {method:?} requires beta = {required}, spec has beta = {got}")]
    MethodBetaMismatch {
        method: crate::model::DensityMethod,
        required: u32,
        got: u32,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
