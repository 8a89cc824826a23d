//! Dispatches a resolved scenario to the model and collects the report.

use std::time::{Duration, Instant};

use credit_growth::labor::{core_params, sector_wages};
use credit_growth::scalar::rel_diff;
use credit_growth::statics::Status;
use credit_growth::steady::leveraged_pair;
use credit_growth::{
    batch_verify_with, check_assumptions, derive_constants, diagnostics, epsilon_shock, fixed_point_residuals,
    income_coefficient, reconstruct_levels, simulate_with, solve_labor_share, solve_with, AssumptionReport,
    BatchOptions, EconomyState, LaborParams, LevelPath, ModelError, ModelParams, Mobility, ParamBox, PathOutcome,
    SampleOptions, ShockChecks, SimulateOptions, SteadyDiagnostics, SteadyStateSolution, Tolerances, Variant,
    VerdictSummary, VerifyOptions,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::scenario::{Command, ScenarioConfig};

pub const TOOL: &str = "credit-growth";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StatusKind {
    Success,
    PropositionFailure,
    InvariantViolation,
    InvalidConfig,
    AssumptionViolation,
    NumericalFailure,
}

impl StatusKind {
    pub fn code(self) -> i32 {
        match self {
            StatusKind::Success => 0,
            StatusKind::PropositionFailure | StatusKind::InvariantViolation => 1,
            StatusKind::InvalidConfig | StatusKind::AssumptionViolation => 2,
            StatusKind::NumericalFailure => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExitStatus {
    pub code: i32,
    pub kind: StatusKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl ExitStatus {
    pub fn new(kind: StatusKind, message: Option<String>) -> Self {
        Self {
            code: kind.code(),
            kind,
            message,
        }
    }

    pub fn from_error(e: &ModelError) -> Self {
        let kind = if e.is_numerical() {
            StatusKind::NumericalFailure
        } else if matches!(e, ModelError::AssumptionViolated { .. }) {
            StatusKind::AssumptionViolation
        } else {
            StatusKind::InvalidConfig
        };
        Self::new(kind, Some(e.to_string()))
    }
}

/// One invariant evaluated on the results: `ok` iff `value <= bound`, or
/// `value > 0` for positivity checks (bound 0).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub ok: bool,
}

impl Check {
    fn at_most(name: &str, value: f64, bound: f64) -> Self {
        Self {
            name: name.to_string(),
            value,
            bound,
            ok: value <= bound,
        }
    }

    fn positive(name: &str, value: f64) -> Self {
        Self {
            name: name.to_string(),
            value,
            bound: 0.0,
            ok: value > 0.0,
        }
    }
}

/// Gross factor per generation to a net annual rate.
pub fn annualize(gross: f64, years_per_period: f64) -> f64 {
    gross.powf(1.0 / years_per_period) - 1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Annualized {
    pub growth: f64,
    pub rate: f64,
}

impl Annualized {
    pub fn from_years(years: Option<f64>, g_gross: f64, r_gross: f64) -> Option<Self> {
        years.map(|y| Self {
            growth: annualize(g_gross, y),
            rate: annualize(r_gross, y),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteadyResult {
    pub solution: SteadyStateSolution<f64>,
    pub diagnostics: SteadyDiagnostics<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub annualized: Option<Annualized>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    /// `ok`, or the error that stopped this grid point.
    pub status: String,
    pub phi_star: f64,
    pub g_gross: f64,
    pub r_gross: f64,
    pub credit_gdp: f64,
    pub money_share: f64,
    pub ordering_ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub annualized: Option<Annualized>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub axis: String,
    pub rows: Vec<SweepRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulateResult {
    pub initial: EconomyState<f64>,
    pub steady: (f64, f64),
    pub outcome: PathOutcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exit: Option<String>,
    /// States identified with the steady state to absorb rounding.
    pub snaps: usize,
    pub levels: LevelPath<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShockSummary {
    pub shock_period: usize,
    pub eps_old: f64,
    pub eps_new: f64,
    pub old_steady: SteadyStateSolution<f64>,
    pub new_steady: SteadyStateSolution<f64>,
    pub checks: ShockChecks<f64>,
    pub baseline: LevelPath<f64>,
    pub shocked: LevelPath<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LaborResult {
    pub mobility: Mobility,
    pub rho: f64,
    pub nx: f64,
    pub zero_by_convention: bool,
    pub wage_capital: f64,
    pub wage_land: f64,
    pub income_coefficient: f64,
    /// `eta (1 - alpha) A`, the coefficient without real-estate labour.
    pub coefficient_without_land_labor: f64,
    /// Steady state of the core model with `eta` rescaled to the coefficient.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steady: Option<SteadyStateSolution<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steady_note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Results {
    Steady(SteadyResult),
    Sweep(SweepResult),
    Simulate(SimulateResult),
    Shock(ShockSummary),
    Verify(VerdictSummary<f64>),
    Labor(LaborResult),
}

impl Results {
    pub fn kind(&self) -> &'static str {
        match self {
            Results::Steady(_) => "steady",
            Results::Sweep(_) => "sweep",
            Results::Simulate(_) => "simulate",
            Results::Shock(_) => "shock",
            Results::Verify(_) => "verify",
            Results::Labor(_) => "labor",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub config: ScenarioConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub assumptions: Option<AssumptionReport<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub results: Option<Results>,
    pub checks: Vec<Check>,
    pub status: ExitStatus,
    /// Kept out of the serialized report so that reruns are byte-identical.
    #[serde(skip)]
    pub wall_time: Duration,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        self.status.code
    }
}

struct Ctx<'a> {
    cfg: &'a ScenarioConfig,
    tol: Tolerances<f64>,
    assumptions: Option<AssumptionReport<f64>>,
    checks: Vec<Check>,
    /// Set by commands whose claims can fail without an error.
    claim_failure: Option<String>,
}

/// Runs a resolved scenario. Never panics on model errors: they become the
/// report's exit status.
pub fn run(cfg: &ScenarioConfig) -> RunReport {
    let start = Instant::now();
    let mut ctx = Ctx {
        cfg,
        tol: cfg.tolerances(),
        assumptions: None,
        checks: Vec::new(),
        claim_failure: None,
    };
    let outcome = dispatch(&mut ctx);
    let (results, status) = match outcome {
        Ok(r) => {
            let status = if let Some(c) = ctx.checks.iter().find(|c| !c.ok) {
                ExitStatus::new(
                    StatusKind::InvariantViolation,
                    Some(format!("{}: {:e} against bound {:e}", c.name, c.value, c.bound)),
                )
            } else if let Some(msg) = ctx.claim_failure.take() {
                ExitStatus::new(StatusKind::PropositionFailure, Some(msg))
            } else {
                ExitStatus::new(StatusKind::Success, None)
            };
            (Some(r), status)
        }
        Err(e) => (None, ExitStatus::from_error(&e)),
    };
    RunReport {
        tool: TOOL,
        version: VERSION,
        config: cfg.clone(),
        assumptions: ctx.assumptions,
        results,
        checks: ctx.checks,
        status,
        wall_time: start.elapsed(),
    }
}

fn point(cfg: &ScenarioConfig) -> Result<ModelParams<f64>, ModelError> {
    cfg.model_params()
        .ok_or_else(|| ModelError::Invalid(format!("command `{}` needs `params`", cfg.command.name())))
}

fn dispatch(ctx: &mut Ctx) -> Result<Results, ModelError> {
    match ctx.cfg.command {
        Command::Steady => steady(ctx).map(Results::Steady),
        Command::Sweep => sweep(ctx).map(Results::Sweep),
        Command::Simulate => simulate(ctx).map(Results::Simulate),
        Command::Shock => shock(ctx).map(Results::Shock),
        Command::Verify => verify(ctx).map(Results::Verify),
        Command::Labor => labor(ctx).map(Results::Labor),
    }
}

/// Assumption gates, solution, diagnostics and the steady-state invariants.
fn solve_point(
    p: &ModelParams<f64>,
    tol: &Tolerances<f64>,
) -> Result<(AssumptionReport<f64>, SteadyStateSolution<f64>, SteadyDiagnostics<f64>, Vec<Check>), ModelError> {
    let report = check_assumptions(p)?;
    let report = report.into_result()?;
    let sol = solve_with(p, tol)?;
    let diag = diagnostics(&sol, p)?;
    let mut checks = vec![
        Check::at_most(
            "fisher_identity",
            rel_diff(sol.r_gross * (1.0 + p.mu), sol.g_gross),
            tol.identity,
        ),
        Check::at_most("steady_residual", sol.residual, tol.residual),
        Check::positive("money_share", diag.money_share),
    ];
    if p.variant != Variant::Landless {
        let (cap, land) = leveraged_pair(p, sol.r_gross, sol.rx_star)?;
        checks.push(Check::at_most("no_arbitrage", rel_diff(cap, land), tol.residual));
        let (dphi, dr) = fixed_point_residuals(p, &sol)?;
        checks.push(Check::at_most("fixed_point", dphi.max(dr), tol.fixed_point));
    }
    Ok((report, sol, diag, checks))
}

fn steady(ctx: &mut Ctx) -> Result<SteadyResult, ModelError> {
    let p = point(ctx.cfg)?;
    // keep the gate report even when a gate fails
    ctx.assumptions = Some(check_assumptions(&p)?);
    let (_, solution, diagnostics, checks) = solve_point(&p, &ctx.tol)?;
    ctx.checks = checks;
    Ok(SteadyResult {
        annualized: Annualized::from_years(ctx.cfg.years_per_period, solution.g_gross, solution.r_gross),
        solution,
        diagnostics,
    })
}

fn sweep(ctx: &mut Ctx) -> Result<SweepResult, ModelError> {
    let base = point(ctx.cfg)?;
    let s = ctx.cfg.sweep.as_ref().expect("resolved sweep");
    let field = s.field().expect("resolved axis");
    let tol = ctx.tol;
    let years = ctx.cfg.years_per_period;
    let evaluated: Vec<(SweepRow, Vec<Check>, Option<ModelError>)> = s
        .grid()
        .par_iter()
        .map(|&x| {
            let p = base.with(field, x);
            let solved = p.validate().and_then(|_| solve_point(&p, &tol));
            match solved {
                Ok((_, sol, diag, checks)) => (
                    SweepRow {
                        value: x,
                        status: "ok".to_string(),
                        phi_star: sol.phi_star,
                        g_gross: sol.g_gross,
                        r_gross: sol.r_gross,
                        credit_gdp: diag.credit_gdp,
                        money_share: diag.money_share,
                        ordering_ok: diag.ordering_ok,
                        annualized: Annualized::from_years(years, sol.g_gross, sol.r_gross),
                    },
                    checks,
                    None,
                ),
                Err(e) => (
                    SweepRow {
                        value: x,
                        status: e.to_string(),
                        phi_star: f64::NAN,
                        g_gross: f64::NAN,
                        r_gross: f64::NAN,
                        credit_gdp: f64::NAN,
                        money_share: f64::NAN,
                        ordering_ok: false,
                        annualized: None,
                    },
                    Vec::new(),
                    Some(e),
                ),
            }
        })
        .collect();
    let mut rows = Vec::with_capacity(evaluated.len());
    let mut first_error = None;
    let mut solved = 0;
    for (row, checks, err) in evaluated {
        if err.is_none() {
            solved += 1;
        } else if first_error.is_none() {
            first_error = err;
        }
        // keep the worst value of each invariant across the grid
        for c in checks {
            match ctx.checks.iter_mut().find(|k| k.name == c.name) {
                Some(k) if !c.ok || (k.ok && worse(&c, k)) => *k = c,
                Some(_) => {}
                None => ctx.checks.push(c),
            }
        }
        rows.push(row);
    }
    if solved == 0 {
        return Err(first_error.expect("non-empty grid"));
    }
    Ok(SweepResult {
        axis: s.axis.clone(),
        rows,
    })
}

fn worse(c: &Check, k: &Check) -> bool {
    if k.bound == 0.0 {
        c.value < k.value
    } else {
        c.value > k.value
    }
}

fn simulate(ctx: &mut Ctx) -> Result<SimulateResult, ModelError> {
    let p = point(ctx.cfg)?;
    ctx.assumptions = Some(check_assumptions(&p)?);
    let (_, sol, _, checks) = solve_point(&p, &ctx.tol)?;
    ctx.checks = checks;
    let s = ctx.cfg.simulate.expect("resolved simulate");
    let initial = EconomyState {
        t: 0,
        phi: s.phi0.unwrap_or(sol.phi_star),
        r_gross: s.r0.unwrap_or(sol.r_gross),
    };
    let defaults = SimulateOptions::<f64>::default();
    let opts = SimulateOptions {
        tol: ctx.tol,
        snap: if s.snap { defaults.snap } else { None },
    };
    let traj = simulate_with(initial, s.horizon, &p, &opts)?;
    let levels = reconstruct_levels(&traj, s.k0, s.m0, &p)?;
    ctx.checks.push(Check::at_most(
        "flow_of_funds",
        levels.max_flow_of_funds_gap(),
        ctx.tol.residual,
    ));
    ctx.checks.push(Check::at_most(
        "consumption_identity",
        levels.max_consumption_gap(),
        ctx.tol.residual,
    ));
    let min_q = levels.rows.iter().map(|r| r.q).fold(f64::INFINITY, f64::min);
    ctx.checks.push(Check::positive("money_value", min_q));
    Ok(SimulateResult {
        initial: traj.states.first().copied().unwrap_or(initial),
        steady: (sol.phi_star, sol.r_gross),
        outcome: traj.outcome,
        exit: traj.exit.as_ref().map(ToString::to_string),
        snaps: traj.snaps,
        levels,
    })
}

fn shock(ctx: &mut Ctx) -> Result<ShockSummary, ModelError> {
    let p = point(ctx.cfg)?;
    let s = ctx.cfg.shock.expect("resolved shock");
    ctx.assumptions = Some(check_assumptions(&p)?);
    let (_, _, _, checks) = solve_point(&p, &ctx.tol)?;
    let p_new = ModelParams { eps: s.eps_new, ..p };
    let (_, _, _, checks_new) = solve_point(&p_new, &ctx.tol)?;
    ctx.checks = checks;
    for mut c in checks_new {
        c.name = format!("{}_after_shock", c.name);
        ctx.checks.push(c);
    }
    let r = epsilon_shock(&p, s.eps_new, s.period, s.horizon, s.k0, s.m0)?;
    for (name, path) in [("baseline", &r.baseline), ("shocked", &r.shocked)] {
        ctx.checks.push(Check::at_most(
            &format!("flow_of_funds_{name}"),
            path.max_flow_of_funds_gap(),
            ctx.tol.residual,
        ));
        ctx.checks.push(Check::at_most(
            &format!("consumption_identity_{name}"),
            path.max_consumption_gap(),
            ctx.tol.residual,
        ));
    }
    ctx.checks.push(Check::at_most(
        "long_run_growth",
        rel_diff(r.checks.long_run_growth, r.checks.new_steady_growth),
        ctx.tol.fixed_point,
    ));
    if s.eps_new > p.eps && !r.checks.all_hold(s.period) {
        ctx.claim_failure = Some(format!("shock predictions fail: {:?}", r.checks));
    }
    Ok(ShockSummary {
        shock_period: r.shock_period,
        eps_old: r.eps_old,
        eps_new: r.eps_new,
        old_steady: r.old_steady,
        new_steady: r.new_steady,
        checks: r.checks,
        baseline: r.baseline,
        shocked: r.shocked,
    })
}

fn verify(ctx: &mut Ctx) -> Result<VerdictSummary<f64>, ModelError> {
    let cfg = ctx.cfg;
    let v = cfg.verify.as_ref().expect("resolved verify");
    let bx = match (cfg.model_params(), cfg.param_box()) {
        (Some(p), _) => {
            // a single point: fail fast instead of rejection sampling
            let report = check_assumptions(&p)?;
            ctx.assumptions = Some(report.clone());
            report.into_result()?;
            ParamBox::point(&p)
        }
        (None, Some(b)) => b,
        (None, None) => return Err(ModelError::Invalid("verify needs `params` or `box`".into())),
    };
    let opts = BatchOptions {
        verify: VerifyOptions {
            tol: ctx.tol,
            allow_nonpositive_mu: v.allow_nonpositive_mu,
            eps_probe: v.eps_probe,
            limit_rel_tol: v.limit_rel_tol,
        },
        sample: SampleOptions {
            max_draws: v.max_draws,
            ..SampleOptions::default()
        },
        failures_cap: v.witness_cap,
    };
    let props = v.props.as_deref().unwrap_or(&[]);
    let summary = batch_verify_with(&bx, v.n.unwrap_or(1), cfg.seed, props, &opts)?;
    if summary.any_failure() {
        let first = summary.failures.iter().find(|f| f.status == Status::Fail);
        ctx.claim_failure = Some(match first {
            Some(f) => format!(
                "{} fails{}",
                f.prop_id.name(),
                f.note.as_ref().map(|n| format!(": {n}")).unwrap_or_default()
            ),
            None => "proposition failure".to_string(),
        });
    }
    Ok(summary)
}

fn labor(ctx: &mut Ctx) -> Result<LaborResult, ModelError> {
    let p = point(ctx.cfg)?;
    let l = ctx.cfg.labor.expect("resolved labor");
    let lp = LaborParams {
        rho: l.rho,
        base: p,
        mobility: l.mobility,
        nx_fixed: l.nx_fixed,
    };
    let coef = income_coefficient(&lp)?;
    let (wage_capital, wage_land) = if coef.nx > 0.0 {
        sector_wages(&lp, coef.nx)?
    } else {
        (derive_constants(&p)?.productivity * (1.0 - p.alpha), 0.0)
    };
    if l.mobility == Mobility::Mobile {
        let share = solve_labor_share(&lp)?;
        ctx.checks
            .push(Check::at_most("wage_equalization", share.wage_gap, ctx.tol.residual));
    }
    let c = derive_constants(&p)?;
    let (steady, steady_note) = match core_params(&lp).and_then(|q| {
        check_assumptions(&q)?.into_result()?;
        solve_with(&q, &ctx.tol)
    }) {
        Ok(s) => (Some(s), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(LaborResult {
        mobility: l.mobility,
        rho: l.rho,
        nx: coef.nx,
        zero_by_convention: coef.zero_by_convention,
        wage_capital,
        wage_land,
        income_coefficient: coef.coefficient,
        coefficient_without_land_labor: p.eta * (1.0 - p.alpha) * c.productivity,
        steady,
        steady_note,
    })
}
