use thiserror::Error;

use crate::params::Variant;

/// Failure modes of the model operations.
///
/// Payloads are stored as `f64` regardless of the working scalar so that
/// errors can cross API boundaries without carrying the type parameter.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("parameter `{field}` = {value} out of range: {reason}")]
    Domain {
        field: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("assumption `{gate}` violated (margin {margin:e})")]
    AssumptionViolated { gate: &'static str, margin: f64 },
    #[error("operation requires the {expected:?} variant, got {found:?}")]
    WrongVariant { expected: Variant, found: Variant },
    #[error("quadratic has no positive root (roots {lo:e}, {hi:e})")]
    NoPositiveRoot { lo: f64, hi: f64 },
    #[error("residual {residual:e} exceeds tolerance {tolerance:e}")]
    ResidualTooLarge { residual: f64, tolerance: f64 },
    #[error("no sign change in bracket [{lo}, {hi}]")]
    NoRootInBracket { lo: f64, hi: f64 },
    #[error("{sign_changes} sign changes on the scan grid; refusing to pick a root")]
    AmbiguousRoot { sign_changes: usize },
    #[error("root finder did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("leverage undefined: {what}")]
    LeverageUndefined { what: &'static str },
    #[error("non-positive growth factor {growth:e}")]
    NonPositiveGrowth { growth: f64 },
    #[error("non-positive value of money {value:e} in period {period}")]
    NonPositiveMoneyValue { period: usize, value: f64 },
    #[error("land ratio left the domain (phi = {phi:e}) in period {period}")]
    NegativeLandRatio { period: usize, phi: f64 },
    #[error("no admissible finite-difference step around x = {x}")]
    NoAdmissibleStep { x: f64 },
    #[error("sampling box infeasible: {accepted} of {wanted} points after {draws} draws")]
    InfeasibleBox {
        wanted: usize,
        accepted: usize,
        draws: u64,
    },
    #[error("invalid input: {0}")]
    Invalid(String),
}

impl ModelError {
    /// True for failures of the numerical machinery (no root, residual, convergence),
    /// as opposed to inputs outside the model's domain.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            ModelError::NoPositiveRoot { .. }
                | ModelError::ResidualTooLarge { .. }
                | ModelError::NoRootInBracket { .. }
                | ModelError::AmbiguousRoot { .. }
                | ModelError::NoConvergence { .. }
                | ModelError::NoAdmissibleStep { .. }
        )
    }
}

pub type Result<T, E = ModelError> = std::result::Result<T, E>;
