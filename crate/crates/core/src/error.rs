use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("index {index} out of range (count {count})")]
    Index { index: usize, count: usize },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("unbounded set: {0}")]
    Unbounded(String),

    /// Dykstra hit its iteration cap; the last iterate is kept for inspection.
    #[error("dykstra did not converge in {iterations} iterations (gap {gap:e})")]
    Dykstra {
        last: Vec<f64>,
        gap: f64,
        iterations: usize,
    },

    #[error("non-convex objective: {0}")]
    NonConvex(String),

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("diverged at iteration {iteration}: |x|inf = {norm:e} exceeds {limit:e}; reduce the step size (tau = {tau:e})")]
    Diverged {
        iteration: usize,
        norm: f64,
        limit: f64,
        tau: f64,
    },

    #[error("not strongly monotone: {0}")]
    NotStronglyMonotone(String),

    #[error("parse error in {file} line {line}: {msg}")]
    Parse { file: String, line: usize, msg: String },

    #[error("network: {0}")]
    Network(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
