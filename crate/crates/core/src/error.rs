use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("argument outside the operation's domain: {0}")]
    Domain(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("no convergence after {iterations} iterations (best x = {best_x}, f = {best_f})")]
    Convergence {
        iterations: usize,
        best_x: f64,
        best_f: f64,
    },

    #[error("degenerate budget: {0}")]
    DegenerateBudget(String),

    #[error("objective decreased from {previous} to {current} at iteration {iteration}")]
    NonMonotone {
        iteration: usize,
        previous: f64,
        current: f64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
