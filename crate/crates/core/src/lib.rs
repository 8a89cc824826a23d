//! Balanced growth paths, dynamics and comparative statics of a two-sector
//! overlapping-generations growth model with collateralized credit, land
//! speculation and fiat money.
//!
//! Everything is generic over the scalar type ([`Scalar`], i.e. `f32` or
//! `f64`). The aliases at the crate root fix `f64`, which is what the
//! documented tolerances assume; [`f32`](mod@single) aliases are available
//! for quick sweeps.
//!
//! ```
//! use credit_growth::{solve, Params};
//!
//! let sol = solve(&Params::reference()).unwrap();
//! assert!((sol.g_gross - 2.9625).abs() < 1e-12);
//! ```

pub mod dynamics;
pub mod error;
pub mod labor;
pub mod params;
pub mod quadratic;
pub mod roots;
pub mod sampling;
pub mod scalar;
pub mod statics;
pub mod steady;
pub mod tolerances;

pub use dynamics::{
    epsilon_shock, fixed_point_residuals, o3_implicit_step, phi_step, rate_step, reconstruct_levels, simulate,
    simulate_with, steady_trajectory, EconomyState, LevelPath, LevelRow, PathOutcome, ShockChecks, ShockResult,
    SimulateOptions, Trajectory,
};
pub use error::{ModelError, Result};
pub use labor::{entrepreneur_income, income_coefficient, solve_labor_share, LaborParams, LaborShare, Mobility};
pub use params::{
    check_assumptions, derive_constants, technology_for_productivity, AssumptionReport, DerivedConstants, Gate, GateId,
    ModelParams, ParamField, Variant,
};
pub use sampling::{sample_parameters, sample_parameters_with, Interval, ParamBox, Sample, SampleOptions};
pub use scalar::Scalar;
pub use statics::{
    batch_verify, batch_verify_with, central_diff, eps_limits, partial, verify_proposition, verify_proposition_with,
    BatchOptions, Derivative, Output, PropositionId, PropositionVerdict, Status, VerdictSummary, VerifyOptions,
};
pub use steady::{
    diagnostics, leverage_factors, leveraged_returns, solve, solve_eps_zero, solve_general, solve_landless, solve_o3,
    solve_with, FullParticipation, PriceRent, SteadyDiagnostics, SteadyStateSolution,
};
pub use tolerances::Tolerances;

/// Model parameters in `f64`.
pub type Params = ModelParams<f64>;
pub type Constants = DerivedConstants<f64>;
pub type Solution = SteadyStateSolution<f64>;
pub type Diagnostics = SteadyDiagnostics<f64>;
pub type State = EconomyState<f64>;
pub type Path = Trajectory<f64>;
pub type Levels = LevelPath<f64>;
pub type Verdict = PropositionVerdict<f64>;
pub type Summary = VerdictSummary<f64>;
pub type Box64 = ParamBox<f64>;

/// The same aliases in `f32`.
pub mod single {
    use super::*;

    pub type Params = ModelParams<f32>;
    pub type Solution = SteadyStateSolution<f32>;
    pub type State = EconomyState<f32>;
    pub type Path = Trajectory<f32>;
    pub type Levels = LevelPath<f32>;
}
