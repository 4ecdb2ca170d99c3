use thiserror::Error;

/// Errors raised by the market model and its solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MarketError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("privacy risks {low} and {high} are closer than the minimum gap {gap_min}")]
    DegenerateDifferentiation { low: f64, high: f64, gap_min: f64 },

    #[error("quantile {0} outside [0, 1]")]
    QuantileOutOfRange(f64),

    #[error("SP index {index} out of range for a market of {count} SPs")]
    IndexOutOfRange { index: usize, count: usize },

    #[error("stage-2 linear system is singular at row {row}")]
    SingularSystem { row: usize },

    #[error("no admissible privacy risk left for SP {index} after excluding opponents")]
    EmptyDomain { index: usize },

    #[error("brute-force stage-2 search did not reach a fixed point in {iterations} rounds")]
    NonConvergence { iterations: usize },

    #[error("profile is not an equilibrium: SP {index} gains {gain} by deviating")]
    NotAnEquilibrium { index: usize, gain: f64 },
}

pub type Result<T> = std::result::Result<T, MarketError>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> MarketError {
    MarketError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
