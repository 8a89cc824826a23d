//! Numerical tolerances used by solvers and certifiers.

use serde::{Deserialize, Serialize};

use crate::scalar::{attainable, Scalar};

/// Every threshold a solver or checker compares against.
///
/// [`Tolerances::standard`] gives the documented defaults, raised to a small
/// multiple of machine epsilon where the scalar type cannot reach them (`f32`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances<T> {
    /// Relative residual accepted for a steady-state root.
    pub residual: T,
    /// Relative error allowed on identities that hold by construction.
    pub identity: T,
    /// Absolute distance counted as "at the steady state" for the dynamic maps.
    pub fixed_point: T,
    /// Relative magnitude below which a derivative estimate is treated as zero.
    pub noise: T,
    /// `|theta - theta_x|` below which sign(theta - theta_x) claims are degenerate.
    pub degeneracy: T,
    /// Largest `eps` treated as "sufficiently small" for certification.
    pub eps_regime: T,
}

impl<T: Scalar> Tolerances<T> {
    pub fn standard() -> Self {
        Self {
            residual: attainable(1e-10, 64.0),
            identity: attainable(1e-12, 16.0),
            fixed_point: attainable(1e-9, 256.0),
            noise: attainable(1e-8, 64.0),
            degeneracy: attainable(1e-6, 16.0),
            eps_regime: attainable(1e-3, 0.0),
        }
    }
}

impl<T: Scalar> Default for Tolerances<T> {
    fn default() -> Self {
        Self::standard()
    }
}
