use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("space mismatch: {0}")]
    SpaceMismatch(String),

    #[error("point with norm {norm} lies outside the operator domain (radius {radius})")]
    Domain { norm: f64, radius: f64 },

    #[error("exponent p = {p} is outside the theorem regime 1 < p <= 2")]
    Regime { p: f64 },

    #[error("resolvent solver did not converge in {iterations} iterations (best residual {best_residual:e})")]
    NonConvergence { iterations: usize, best_residual: f64 },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serialize(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
