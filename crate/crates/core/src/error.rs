use thiserror::Error;

/// Unified error type for the toolkit.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A point fell outside the growth rate's domain J, or an evaluation left
    /// the domain's image (0, ∞).
    #[error("domain error: {0}")]
    Domain(String),

    /// A group or bound computation left the representable range.
    #[error("overflow: {0}")]
    Overflow(String),

    /// Malformed expression text. `offset` is a byte offset into the input.
    #[error("parse error at byte {offset}: expected {expected}, found {found}")]
    Parse {
        offset: usize,
        expected: String,
        found: String,
    },

    /// Expression evaluation produced a non-finite value or hit an invalid
    /// operand (division by zero, log of a nonpositive number, ...).
    #[error("evaluation error: {0}")]
    Eval(String),

    /// The adaptive integrator could not meet its tolerances.
    #[error("integration error: {0}")]
    Integration(String),

    /// A transition matrix was numerically singular. Linear ODE transition
    /// matrices are invertible, so this signals integrator failure.
    #[error("singular matrix: {0}")]
    Singular(String),

    /// Invalid configuration or constant (e.g. theta outside (0,1)).
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
