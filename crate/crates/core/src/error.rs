use thiserror::Error;

/// Failures surfaced by the numerical and exact engines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("tail not certifiable: {0}")]
    TailNotCertifiable(String),
    #[error("degenerate denominator at w = {w}")]
    DegenerateDenominator { w: f64 },
    #[error("polynomial vanishes at an interval endpoint; Sturm method not possible")]
    EndpointZero,
    #[error("quadrature did not converge on [{lo}, {hi}]")]
    QuadratureNotConverged { lo: f64, hi: f64 },
    #[error("zero function")]
    ZeroFunction,
    #[error("sampling density too low: delta = {delta} >= 1/(2 sqrt M) = {limit}")]
    DensityTooLow { delta: f64, limit: f64 },
    #[error("sufficient condition not met: 2 alpha sqrt(M) = {delta} > 1")]
    ConditionNotMet { delta: f64 },
    #[error("{0} has no closed-form time-domain expression")]
    NoTimeDomain(String),
}

impl Error {
    /// True for errors caused by malformed or out-of-contract input.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_)
                | Error::DensityTooLow { .. }
                | Error::ConditionNotMet { .. }
                | Error::NoTimeDomain(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
