use thiserror::Error;

/// Errors raised by the market model and its solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MarketError {
    /// An input lies outside the domain of the function it was passed to.
    #[error("domain error: {0}")]
    Domain(String),

    /// Operational cost and limited coverage were both requested.
    #[error("unsupported combination: C = {cost} and eta = {coverage} (only one extension may be active)")]
    UnsupportedCombination { cost: f64, coverage: f64 },

    /// A decision violates one of the market constraints.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// The Stage-I search was still improving after its final refinement round.
    #[error("stage-I search did not converge: last refinement improved profit by {improvement:e} (tolerance {tolerance:e})")]
    NonConvergence { improvement: f64, tolerance: f64 },

    /// Both ends of a capacity bracket fall in the same regime.
    #[error("invalid bracket [{lo}, {hi}]: {detail}")]
    Bracket { lo: f64, hi: f64, detail: String },
}

pub type Result<T> = std::result::Result<T, MarketError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(MarketError::Domain(msg.into()))
}
