use thiserror::Error;

use crate::dynamics::MFState;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter combination for which a formula is undefined.
    #[error("domain error: {0}")]
    Domain(String),

    /// An operation was called outside the parameter regime it is defined for.
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Adaptive step size collapsed; carries the last accepted state.
    #[error("stiff or singular trajectory at t = {t}: step size underflow")]
    StiffTrajectory { t: f64, last_state: Vec<f64> },

    #[error("step budget of {max_steps} exhausted at t = {t}")]
    StepBudget { t: f64, max_steps: usize },

    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        last: MFState,
    },

    #[error("fit error: {0}")]
    Fit(String),

    #[error("config error at line {line}: {key}: {message}")]
    Config { line: usize, key: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(line: usize, key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            line,
            key: key.into(),
            message: message.into(),
        }
    }
}
