use thiserror::Error;

/// Crate-wide error type. Every precondition violation reachable from the
/// CLI maps to one of these variants with the violated condition named.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("coefficient field is not symmetric at node {node}: a[{i}][{j}] != a[{j}][{i}]")]
    NotSymmetric { node: usize, i: usize, j: usize },

    #[error("coefficient field is not elliptic at node {node}: smallest eigenvalue {lambda_min}")]
    NotElliptic { node: usize, lambda_min: f64 },

    #[error("ball B(0, {r}) is not covered by the gridded region (half side {half_side})")]
    Coverage { r: f64, half_side: f64 },

    #[error("arrangement center at lattice index {j:?} violates containment: |x_j - j|_inf = {margin} > 1/2 - delta = {allowed}")]
    CenterOutOfCell {
        j: Vec<i64>,
        margin: f64,
        allowed: f64,
    },

    #[error("empty spectral basis: {0}")]
    EmptyBasis(String),

    #[error("eigensolver did not converge: max residual {residual} after {iterations} iterations")]
    SolverFailure { residual: f64, iterations: usize },

    #[error("undefined ratio: {0}")]
    UndefinedRatio(String),

    #[error("tail integral did not converge; divergent or too slowly decaying integrand")]
    DivergentTail,

    #[error("field contains a non-finite value at node {0}")]
    NonFiniteValue(usize),

    #[error("support violation: {count} nodes outside the admissible support (first offender node {first})")]
    SupportViolation { count: usize, first: usize },

    #[error("csv format error in {path}: {message}")]
    CsvFormat { path: String, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
