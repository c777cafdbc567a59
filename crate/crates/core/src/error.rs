use thiserror::Error;

/// Errors raised by the bridge toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum BridgeError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("mode frequency must be positive, got {0}")]
    NonPositiveFrequency(f64),

    #[error("division by zero: {0}")]
    DivisionByZero(&'static str),

    #[error("no balance possible: J1 = J2 requires omega2 = omega3 (got {omega2} and {omega3})")]
    NoBalancePossible { omega2: f64, omega3: f64 },

    #[error("bridge is not balanced: {0}")]
    NotBalanced(String),

    #[error("no dark mode exists: {0}")]
    NoDarkMode(String),

    #[error("outside the validity regime: {0}")]
    OutOfRegime(String),

    #[error("inconclusive sweep: envelope maximum sits on the grid boundary at J3 = {0}")]
    InconclusiveSweep(f64),

    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("time must be non-negative, got {0}")]
    NegativeTime(f64),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, BridgeError>;
