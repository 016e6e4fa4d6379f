//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FwError {
    /// Bad grid, config file, or parameter combination.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Input outside the mathematical domain of an operator (e.g. c <= 1).
    #[error("domain error: {0}")]
    Domain(String),

    /// Input data that cannot be processed (negative densities, short tails, ...).
    #[error("data error: {0}")]
    Data(String),

    /// An iterative solver hit its iteration cap or diverged.
    #[error("solver did not converge: {reason} (after {iterations} iterations, residual {residual:.3e})")]
    NonConvergence {
        reason: String,
        iterations: usize,
        residual: f64,
    },

    /// A minimization iterate escaped the penalty barrier ||u||_{H1}^2 >= 2R^2.
    #[error("penalty barrier breached: ||u||_H1^2 = {h1_sq:.6e} >= {limit:.6e}")]
    BarrierBreach { h1_sq: f64, limit: f64 },

    /// Time evolution produced non-finite or unbounded values.
    #[error("blow-up detected at t = {t:.6} (max |u| = {amplitude:.3e})")]
    BlowUp { t: f64, amplitude: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serialize(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, FwError>;
