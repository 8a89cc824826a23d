//! The reduced two-dimensional system in `(phi_t, 1 + r_t)`, trajectories,
//! level reconstruction and the permanent land-productivity shock.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::params::{derive_constants, DerivedConstants, ModelParams, Variant};
use crate::roots::{brent, expand_bracket, unique_root_on_grid, RootOptions};
use crate::scalar::{lit, rel_diff, to_f64, Scalar};
use crate::steady::{self, leverage_factors_with, SteadyStateSolution};
use crate::tolerances::Tolerances;

/// Cells in the scan grid used to locate the next-period rate.
pub const RATE_SCAN_CELLS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EconomyState<T> {
    pub t: usize,
    pub phi: T,
    pub r_gross: T,
}

/// How a simulated path ended. Exactly one applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathOutcome {
    /// Last state within the fixed-point tolerance of the steady state.
    ReachedSteadyState,
    /// Ended farther from the steady state than it started.
    Diverged,
    /// A step left the economic domain; the error is kept on the trajectory.
    DomainExit,
    /// Still inside the domain, closer than at the start but not yet at the steady state.
    InTransit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory<T> {
    pub variant: Variant,
    pub states: Vec<EconomyState<T>>,
    pub outcome: PathOutcome,
    /// `(phi*, 1 + r*)` the path is compared against, when the steady state exists.
    pub steady: Option<(T, T)>,
    /// Why the path stopped early, for [`PathOutcome::DomainExit`].
    #[serde(skip)]
    pub exit: Option<ModelError>,
    pub levels: Option<LevelPath<T>>,
    /// Periods whose state was identified with the steady state (see [`SimulateOptions::snap`]).
    pub snaps: usize,
}

impl<T: Scalar> Trajectory<T> {
    pub fn last(&self) -> &EconomyState<T> {
        self.states.last().expect("trajectories hold at least one state")
    }
}

/// Per-period evaluation of the reduced maps for one parameter point.
struct Maps<'a, T> {
    p: &'a ModelParams<T>,
    c: DerivedConstants<T>,
}

impl<'a, T: Scalar> Maps<'a, T> {
    fn new(p: &'a ModelParams<T>) -> Result<Self> {
        Ok(Self {
            p,
            c: derive_constants(p)?,
        })
    }

    fn growth(&self, phi: T, s: T) -> Result<T> {
        let one = T::one();
        let wage = self.p.eta * (one - self.p.alpha);
        let g = match self.p.variant {
            Variant::O3 => steady::o3_growth(self.p, &self.c, phi),
            _ => {
                let lf = leverage_factors_with(self.p, &self.c, s)?;
                self.c.productivity * lf.lev_capital * (wage - lf.downpayment_land * phi)
            }
        };
        if g > T::zero() && g.is_finite() {
            Ok(g)
        } else {
            Err(ModelError::NonPositiveGrowth { growth: to_f64(g) })
        }
    }

    fn rx(&self, s: T) -> Result<T> {
        Ok(leverage_factors_with(self.p, &self.c, s)?.rx)
    }

    fn psi(&self, phi: T, s: T) -> Result<T> {
        let g = self.growth(phi, s)?;
        Ok(phi * self.rx(s)? / g - self.c.land_term)
    }

    /// Real money balances over `A K`.
    fn money(&self, phi: T, s: T) -> Result<T> {
        let g = self.growth(phi, s)?;
        Ok((T::one() - self.p.alpha) - g / self.c.productivity - phi)
    }

    /// `m(phi', r') = (1 + r)(1 + mu) m(phi, r) / (1 + g)`: target for the next money share.
    fn money_target(&self, phi: T, s: T) -> Result<T> {
        let m = self.money(phi, s)?;
        let g = self.growth(phi, s)?;
        Ok(s * (T::one() + self.p.mu) * m / g)
    }

    fn rate_bracket(&self) -> Result<(T, T)> {
        let rc = self.c.capital_return;
        let floor = self.p.theta * rc;
        let margin = lit::<T>(1e-9) * (rc - floor);
        if !(rc > floor) {
            return Err(ModelError::NoRootInBracket {
                lo: to_f64(floor),
                hi: to_f64(rc),
            });
        }
        Ok((floor + margin, rc))
    }

    /// O3: the current rate consistent with `phi` (implicit in `phi_{t+1}`), and `phi_{t+1}`.
    fn o3_step(&self, phi: T) -> Result<(T, T)> {
        let one = T::one();
        let m = self.money(phi, one)?;
        if !(m > T::zero()) {
            return Err(ModelError::NonPositiveMoneyValue {
                period: 0,
                value: to_f64(m),
            });
        }
        let g = self.growth(phi, one)?;
        let scale = g / ((one + self.p.mu) * m);
        let resid = |s: T| -> Result<T> {
            let next = self.psi(phi, s)?;
            Ok(self.money(next, s)? * scale - s)
        };
        let floor = lit::<T>(1e-12);
        let guess = self.c.capital_return;
        let (lo, hi) = expand_bracket(resid, guess * lit(0.5), guess * lit(1.5), floor, 60)?;
        let root = brent(resid, lo, hi, RootOptions::default())?;
        let s = root.x;
        Ok((s, self.psi(phi, s)?))
    }
}

/// `phi_{t+1}` from the land-price map at `(phi_t, 1 + r_t)`.
pub fn phi_step<T: Scalar>(s: &EconomyState<T>, p: &ModelParams<T>) -> Result<T> {
    Maps::new(p)?.psi(s.phi, s.r_gross)
}

/// Main / landless: `1 + r_{t+1}` solving the money-market condition given
/// `(phi_t, 1 + r_t, phi_{t+1})`. O3: `1 + r_t` from `(phi_t, phi_{t+1})` in closed form.
pub fn rate_step<T: Scalar>(s: &EconomyState<T>, phi_next: T, p: &ModelParams<T>) -> Result<T> {
    let maps = Maps::new(p)?;
    match p.variant {
        Variant::O3 => {
            let one = T::one();
            let m = maps.money(s.phi, one)?;
            let m_next = maps.money(phi_next, one)?;
            let g = maps.growth(s.phi, one)?;
            if !(m > T::zero()) {
                return Err(ModelError::NonPositiveMoneyValue {
                    period: s.t,
                    value: to_f64(m),
                });
            }
            Ok(m_next / m * g / (one + p.mu))
        }
        _ => {
            let target = maps.money_target(s.phi, s.r_gross)?;
            let (lo, hi) = maps.rate_bracket()?;
            let root = unique_root_on_grid(|x| Ok(maps.money(phi_next, x)? - target), lo, hi, RATE_SCAN_CELLS)?;
            Ok(root.x)
        }
    }
}

/// Money-market residual `m(phi', r') - (1 + r)(1 + mu) m(phi, r)/(1 + g)` (main / landless).
pub fn rate_residual<T: Scalar>(s: &EconomyState<T>, next: &EconomyState<T>, p: &ModelParams<T>) -> Result<T> {
    let maps = Maps::new(p)?;
    Ok(maps.money(next.phi, next.r_gross)? - maps.money_target(s.phi, s.r_gross)?)
}

/// O3: the rate consistent with `phi_t` and the resulting `phi_{t+1}`, solving
/// `1 + r_t = omega(phi_t, psi(phi_t, 1 + r_t))`.
pub fn o3_implicit_step<T: Scalar>(phi: T, p: &ModelParams<T>) -> Result<(T, T)> {
    if p.variant != Variant::O3 {
        return Err(ModelError::WrongVariant {
            expected: Variant::O3,
            found: p.variant,
        });
    }
    Maps::new(p)?.o3_step(phi)
}

/// One step of the system; returns the next state after checking it stays in the domain.
fn advance<T: Scalar>(maps: &Maps<'_, T>, s: &EconomyState<T>) -> Result<(EconomyState<T>, EconomyState<T>)> {
    let t = s.t;
    let (current, phi_next, r_next) = match maps.p.variant {
        Variant::O3 => {
            let (r, phi_next) = maps.o3_step(s.phi).map_err(|e| with_period(e, t))?;
            let current = EconomyState { r_gross: r, ..*s };
            if phi_next < T::zero() {
                return Err(ModelError::NegativeLandRatio {
                    period: t + 1,
                    phi: to_f64(phi_next),
                });
            }
            let (r_next, _) = maps.o3_step(phi_next).map_err(|e| with_period(e, t + 1))?;
            (current, phi_next, r_next)
        }
        _ => {
            let phi_next = maps.psi(s.phi, s.r_gross).map_err(|e| with_period(e, t))?;
            if phi_next < T::zero() {
                return Err(ModelError::NegativeLandRatio {
                    period: t + 1,
                    phi: to_f64(phi_next),
                });
            }
            let target = maps.money_target(s.phi, s.r_gross)?;
            let (lo, hi) = maps.rate_bracket()?;
            let root = unique_root_on_grid(|x| Ok(maps.money(phi_next, x)? - target), lo, hi, RATE_SCAN_CELLS)?;
            (*s, phi_next, root.x)
        }
    };
    let next = EconomyState {
        t: t + 1,
        phi: phi_next,
        r_gross: r_next,
    };
    check_state(maps, &next)?;
    Ok((current, next))
}

fn with_period(e: ModelError, period: usize) -> ModelError {
    match e {
        ModelError::NonPositiveMoneyValue { value, .. } => ModelError::NonPositiveMoneyValue { period, value },
        other => other,
    }
}

fn check_state<T: Scalar>(maps: &Maps<'_, T>, s: &EconomyState<T>) -> Result<()> {
    if !s.phi.is_finite() || !s.r_gross.is_finite() {
        return Err(ModelError::Invalid(format!("non-finite state in period {}", s.t)));
    }
    if s.phi < T::zero() {
        return Err(ModelError::NegativeLandRatio {
            period: s.t,
            phi: to_f64(s.phi),
        });
    }
    let m = maps.money(s.phi, s.r_gross)?;
    if !(m > T::zero()) {
        return Err(ModelError::NonPositiveMoneyValue {
            period: s.t,
            value: to_f64(m),
        });
    }
    Ok(())
}

fn distance<T: Scalar>(s: &EconomyState<T>, steady: (T, T)) -> T {
    (s.phi - steady.0).abs().max((s.r_gross - steady.1).abs())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulateOptions<T> {
    pub tol: Tolerances<T>,
    /// Both roots of the linearized system lie outside the unit circle, so a
    /// rounding error at the steady state grows several-fold each period. A new
    /// state within `snap` (relative) of the solved steady state is replaced by
    /// it. `None` iterates the raw maps.
    pub snap: Option<T>,
}

impl<T: Scalar> Default for SimulateOptions<T> {
    fn default() -> Self {
        Self {
            tol: Tolerances::standard(),
            snap: Some(T::epsilon() * lit(1024.0)),
        }
    }
}

/// Iterates the reduced system for `horizon` periods starting at `s0`.
///
/// Step failures end the path with [`PathOutcome::DomainExit`] instead of an
/// error. For O3 the rate in `s0` is replaced by the one implied by `phi_0`.
pub fn simulate<T: Scalar>(s0: EconomyState<T>, horizon: usize, p: &ModelParams<T>) -> Result<Trajectory<T>> {
    simulate_with(s0, horizon, p, &SimulateOptions::default())
}

pub fn simulate_with<T: Scalar>(
    s0: EconomyState<T>,
    horizon: usize,
    p: &ModelParams<T>,
    opts: &SimulateOptions<T>,
) -> Result<Trajectory<T>> {
    let tol = &opts.tol;
    if horizon == 0 {
        return Err(ModelError::Invalid("horizon must be at least 1".into()));
    }
    let maps = Maps::new(p)?;
    let steady = steady::solve_with(p, tol).ok().map(|s| (s.phi_star, s.r_gross));

    let mut states = Vec::with_capacity(horizon);
    let mut exit = None;
    let mut current = s0;
    if p.variant == Variant::O3 {
        match maps.o3_step(current.phi) {
            Ok((r, _)) => current.r_gross = r,
            Err(e) => exit = Some(e),
        }
    }
    if exit.is_none() {
        if let Err(e) = check_state(&maps, &current) {
            exit = Some(e);
        }
    }
    if let Some(e) = exit {
        return Ok(Trajectory {
            variant: p.variant,
            states: vec![current],
            outcome: PathOutcome::DomainExit,
            steady,
            exit: Some(e),
            levels: None,
            snaps: 0,
        });
    }
    let mut snaps = 0;
    states.push(current);
    while states.len() < horizon {
        match advance(&maps, &current) {
            Ok((_, mut next)) => {
                if let (Some(ss), Some(snap)) = (steady, opts.snap) {
                    let near_phi = (next.phi - ss.0).abs() <= snap * ss.0.abs().max(T::one());
                    let near_r = (next.r_gross - ss.1).abs() <= snap * ss.1.abs();
                    if near_phi && near_r && (next.phi != ss.0 || next.r_gross != ss.1) {
                        next.phi = ss.0;
                        next.r_gross = ss.1;
                        snaps += 1;
                    }
                }
                states.push(next);
                current = next;
            }
            Err(e) => {
                exit = Some(e);
                break;
            }
        }
    }

    let outcome = if exit.is_some() {
        PathOutcome::DomainExit
    } else {
        match steady {
            Some(ss) => {
                let d_end = distance(states.last().unwrap(), ss);
                let d_start = distance(&states[0], ss);
                if d_end < tol.fixed_point {
                    PathOutcome::ReachedSteadyState
                } else if d_end > d_start {
                    PathOutcome::Diverged
                } else {
                    PathOutcome::InTransit
                }
            }
            None => PathOutcome::InTransit,
        }
    };
    Ok(Trajectory {
        variant: p.variant,
        states,
        outcome,
        steady,
        exit,
        levels: None,
        snaps,
    })
}

/// `(|psi(phi*, r*) - phi*|, |omega - r*|)` at a solved steady state.
pub fn fixed_point_residuals<T: Scalar>(p: &ModelParams<T>, sol: &SteadyStateSolution<T>) -> Result<(T, T)> {
    let maps = Maps::new(p)?;
    match p.variant {
        Variant::O3 => {
            let (r, phi_next) = maps.o3_step(sol.phi_star)?;
            Ok(((phi_next - sol.phi_star).abs(), (r - sol.r_gross).abs()))
        }
        _ => {
            let s = EconomyState {
                t: 0,
                phi: sol.phi_star,
                r_gross: sol.r_gross,
            };
            let phi_next = maps.psi(s.phi, s.r_gross)?;
            let r_next = rate_step(&s, phi_next, p)?;
            Ok(((phi_next - sol.phi_star).abs(), (r_next - sol.r_gross).abs()))
        }
    }
}

/// Aggregate quantities of one period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelRow<T> {
    pub t: usize,
    pub phi: T,
    pub r_gross: T,
    /// Capital at the start of the period.
    pub k: T,
    /// Capital carried into the next period.
    pub k_next: T,
    /// Land price.
    pub p: T,
    /// Goods price of one unit of money.
    pub q: T,
    /// Money stock.
    pub m: T,
    /// Real money balances `Q M`.
    pub qm: T,
    pub w: T,
    pub y: T,
    /// Land dividend.
    pub d: T,
    /// Aggregate transfer to old savers.
    pub transfer: T,
    /// Transfer per old saver (cohort mass `1 - eta`).
    pub transfer_per_saver: T,
    /// Consumption from the cohort budgets.
    pub c_budget: T,
    /// Consumption from goods-market clearing.
    pub c_goods: T,
    /// Realized growth factor `K_{t+1} / K_t`.
    pub g: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelPath<T> {
    pub rows: Vec<LevelRow<T>>,
}

impl<T: Scalar> LevelPath<T> {
    /// Largest `|w - K' - P - QM| / w` over the path.
    pub fn max_flow_of_funds_gap(&self) -> T {
        self.rows
            .iter()
            .map(|r| (r.w - r.k_next - r.p - r.qm).abs() / r.w)
            .fold(T::zero(), T::max)
    }

    /// Largest relative gap between the two consumption computations.
    pub fn max_consumption_gap(&self) -> T {
        self.rows
            .iter()
            .map(|r| rel_diff(r.c_budget, r.c_goods))
            .fold(T::zero(), T::max)
    }
}

fn level_rows<'p, T: Scalar>(
    states: &[EconomyState<T>],
    params_at: impl Fn(usize) -> &'p ModelParams<T>,
    k0: T,
    m0: T,
) -> Result<Vec<LevelRow<T>>>
where
    T: 'p,
{
    if !(k0 > T::zero()) || !(m0 > T::zero()) {
        return Err(ModelError::Invalid("initial capital and money must be positive".into()));
    }
    let mut rows = Vec::with_capacity(states.len());
    let mut k = k0;
    let mut m = m0;
    let mut m_prev = m0 / (T::one() + params_at(states.first().map_or(0, |s| s.t)).mu);
    for s in states {
        let p = params_at(s.t);
        let maps = Maps::new(p)?;
        let big_a = maps.c.productivity;
        let e = maps.c.land_term;
        let one = T::one();
        let g = maps.growth(s.phi, s.r_gross)?;
        let share = maps.money(s.phi, s.r_gross)?;
        if !(share > T::zero()) {
            return Err(ModelError::NonPositiveMoneyValue {
                period: s.t,
                value: to_f64(share),
            });
        }
        let ak = big_a * k;
        let k_next = g * k;
        let qm = share * ak;
        let q = qm / m;
        let price = s.phi * ak;
        let d = e * ak;
        let transfer = p.mu * m_prev * q;
        rows.push(LevelRow {
            t: s.t,
            phi: s.phi,
            r_gross: s.r_gross,
            k,
            k_next,
            p: price,
            q,
            m,
            qm,
            w: (one - p.alpha) * ak,
            y: (one + e) * ak,
            d,
            transfer,
            transfer_per_saver: transfer / (one - p.eta),
            c_budget: maps.c.capital_return * k + d + price + qm,
            c_goods: (one + e) * ak + (one - p.delta) * k - k_next,
            g,
        });
        k = k_next;
        m_prev = m;
        m = m * (one + p.mu);
    }
    Ok(rows)
}

/// Levels implied by a trajectory, from initial capital `k0` and money stock `m0`.
pub fn reconstruct_levels<T: Scalar>(traj: &Trajectory<T>, k0: T, m0: T, p: &ModelParams<T>) -> Result<LevelPath<T>> {
    if traj.variant != p.variant {
        return Err(ModelError::WrongVariant {
            expected: traj.variant,
            found: p.variant,
        });
    }
    Ok(LevelPath {
        rows: level_rows(&traj.states, |_| p, k0, m0)?,
    })
}

/// The equilibrium path that jumps to the steady state at date 0 and stays there.
pub fn steady_trajectory<T: Scalar>(p: &ModelParams<T>, horizon: usize) -> Result<Trajectory<T>> {
    if horizon == 0 {
        return Err(ModelError::Invalid("horizon must be at least 1".into()));
    }
    let sol = steady::solve(p)?;
    let states = (0..horizon)
        .map(|t| EconomyState {
            t,
            phi: sol.phi_star,
            r_gross: sol.r_gross,
        })
        .collect();
    Ok(Trajectory {
        variant: p.variant,
        states,
        outcome: PathOutcome::ReachedSteadyState,
        steady: Some((sol.phi_star, sol.r_gross)),
        exit: None,
        levels: None,
        snaps: 0,
    })
}

/// Outcome checks of the land-productivity shock.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShockChecks<T> {
    pub land_price_jumps: bool,
    pub output_jumps: bool,
    pub growth_falls: bool,
    /// First period from which shocked capital stays strictly below baseline.
    pub capital_crossover: Option<usize>,
    /// First period from which shocked output stays strictly below baseline.
    pub output_crossover: Option<usize>,
    /// Realized growth at the end of the shocked path.
    pub long_run_growth: T,
    /// Steady-state growth at the new `eps`.
    pub new_steady_growth: T,
}

impl<T: Scalar> ShockChecks<T> {
    pub fn all_hold(&self, shock_period: usize) -> bool {
        self.land_price_jumps
            && self.output_jumps
            && self.growth_falls
            && self.capital_crossover.map_or(false, |t| t <= shock_period + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShockResult<T> {
    pub shock_period: usize,
    pub eps_old: T,
    pub eps_new: T,
    pub baseline: LevelPath<T>,
    pub shocked: LevelPath<T>,
    pub old_steady: SteadyStateSolution<T>,
    pub new_steady: SteadyStateSolution<T>,
    pub checks: ShockChecks<T>,
}

fn stays_below<T: Scalar>(a: &[LevelRow<T>], b: &[LevelRow<T>], from: usize, f: impl Fn(&LevelRow<T>) -> T) -> Option<usize> {
    // last index where a >= b, searched backwards
    let n = a.len().min(b.len());
    let mut first = None;
    for i in (from..n).rev() {
        if f(&a[i]) < f(&b[i]) {
            first = Some(i);
        } else {
            break;
        }
    }
    first.map(|i| a[i].t)
}

/// Unanticipated permanent rise in `eps` at date `shock_period`. Both paths sit
/// on their steady state (jump variables move at once); they share capital up
/// to and including `K_s`.
pub fn epsilon_shock<T: Scalar>(
    p: &ModelParams<T>,
    eps_new: T,
    shock_period: usize,
    horizon: usize,
    k0: T,
    m0: T,
) -> Result<ShockResult<T>> {
    if eps_new < p.eps {
        return Err(ModelError::Domain {
            field: "eps_new",
            value: to_f64(eps_new),
            reason: "must not be below the current eps",
        });
    }
    if shock_period >= horizon {
        return Err(ModelError::Invalid(format!(
            "shock period {shock_period} must lie inside the horizon {horizon}"
        )));
    }
    let p_new = ModelParams { eps: eps_new, ..*p };
    let old_steady = steady::solve(p)?;
    let new_steady = steady::solve(&p_new)?;

    let base_traj = steady_trajectory(p, horizon)?;
    let shocked_states: Vec<_> = (0..horizon)
        .map(|t| {
            let s = if t < shock_period { &old_steady } else { &new_steady };
            EconomyState {
                t,
                phi: s.phi_star,
                r_gross: s.r_gross,
            }
        })
        .collect();

    let baseline = LevelPath {
        rows: level_rows(&base_traj.states, |_| p, k0, m0)?,
    };
    let shocked = LevelPath {
        rows: level_rows(&shocked_states, |t| if t < shock_period { p } else { &p_new }, k0, m0)?,
    };

    let b = &baseline.rows[shock_period];
    let s = &shocked.rows[shock_period];
    let growth_falls = shocked.rows[shock_period..]
        .iter()
        .zip(&baseline.rows[shock_period..])
        .all(|(x, y)| x.g < y.g);
    let last = shocked.rows.last().unwrap();
    let checks = ShockChecks {
        land_price_jumps: s.p > b.p,
        output_jumps: s.y > b.y,
        growth_falls,
        capital_crossover: stays_below(&shocked.rows, &baseline.rows, shock_period, |r| r.k),
        output_crossover: stays_below(&shocked.rows, &baseline.rows, shock_period, |r| r.y),
        long_run_growth: last.k_next / last.k,
        new_steady_growth: new_steady.g_gross,
    };
    Ok(ShockResult {
        shock_period,
        eps_old: p.eps,
        eps_new,
        baseline,
        shocked,
        old_steady,
        new_steady,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn reference() -> ModelParams<f64> {
        ModelParams::reference()
    }

    fn at_steady(p: &ModelParams<f64>) -> EconomyState<f64> {
        let s = steady::solve(p).unwrap();
        EconomyState { t: 0, phi: s.phi_star, r_gross: s.r_gross }
    }

    #[test]
    fn steady_state_is_a_fixed_point() {
        for eps in [0.0, 0.01] {
            let p = ModelParams { eps, ..reference() };
            let s = at_steady(&p);
            let phi_next = phi_step(&s, &p).unwrap();
            assert!((phi_next - s.phi).abs() < 1e-10);
            let r_next = rate_step(&s, phi_next, &p).unwrap();
            assert!((r_next - s.r_gross).abs() < 1e-10);
        }
    }

    #[test]
    fn rate_residual_vanishes_at_steady_state() {
        let p = reference();
        let s = at_steady(&p);
        let res = rate_residual(&s, &EconomyState { t: 1, ..s }, &p).unwrap();
        assert!(res.abs() < 1e-12);
    }

    #[test]
    fn rate_bracket_at_reference() {
        let p = reference();
        let (lo, hi) = Maps::new(&p).unwrap().rate_bracket().unwrap();
        assert!(lo > 0.3 && lo < 0.3 + 1e-8);
        assert_relative_eq!(hi, 3.0, max_relative = 1e-15);
    }

    #[test]
    fn o3_zero_land_ratio_maps_to_minus_land_term() {
        let p = ModelParams { eps: 0.01, ..reference() }.with_variant(Variant::O3);
        let e = derive_constants(&p).unwrap().land_term;
        for r in [1.5, 2.0, 2.7] {
            let next = phi_step(&EconomyState { t: 0, phi: 0.0, r_gross: r }, &p).unwrap();
            assert_eq!(next, -e);
            assert!(next < 0.0);
        }
    }

    #[test]
    fn half_phi_moves_by_the_map_factor() {
        let p = reference();
        let s = at_steady(&p);
        let half = EconomyState { phi: 0.5 * s.phi, ..s };
        let lf = steady::leverage_factors(&p, s.r_gross).unwrap();
        let maps = Maps::new(&p).unwrap();
        let g = maps.growth(half.phi, half.r_gross).unwrap();
        let next = phi_step(&half, &p).unwrap();
        // lower phi means more growth at the same rate, so the ratio falls
        assert!(lf.rx / g < 1.0);
        assert!(next < half.phi);
        assert_relative_eq!(next, half.phi * lf.rx / g, max_relative = 1e-15);
    }

    #[test]
    fn steady_start_persists_for_fifty_periods() {
        for v in [Variant::Main, Variant::O3] {
            let p = reference().with_variant(v);
            let s0 = at_steady(&p);
            let traj = simulate(s0, 50, &p).unwrap();
            assert_eq!(traj.states.len(), 50, "{v} {:?}", traj.exit);
            assert_eq!(traj.outcome, PathOutcome::ReachedSteadyState, "{v}");
            for s in &traj.states {
                assert!((s.phi - s0.phi).abs() < 1e-9 && (s.r_gross - s0.r_gross).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn raw_maps_amplify_rounding_at_the_steady_state() {
        let p = reference();
        let opts = SimulateOptions { snap: None, ..SimulateOptions::default() };
        let traj = simulate_with(at_steady(&p), 50, &p, &opts).unwrap();
        assert_eq!(traj.outcome, PathOutcome::DomainExit);
        let snapped = simulate(at_steady(&p), 50, &p).unwrap();
        assert!(snapped.snaps > 0);
    }

    #[test]
    fn o3_path_below_steady_state_exits_domain() {
        let p = ModelParams { eps: 0.01, ..reference() }.with_variant(Variant::O3);
        let s0 = at_steady(&p);
        let traj = simulate(EconomyState { phi: s0.phi * (1.0 - 1e-6), ..s0 }, 500, &p).unwrap();
        assert_eq!(traj.outcome, PathOutcome::DomainExit);
        assert!(matches!(traj.exit, Some(ModelError::NegativeLandRatio { .. })));
    }

    #[test]
    fn perturbed_main_path_is_never_accepted() {
        let p = reference();
        let s0 = at_steady(&p);
        let traj = simulate(EconomyState { phi: s0.phi + 1e-6, ..s0 }, 200, &p).unwrap();
        assert!(matches!(traj.outcome, PathOutcome::DomainExit | PathOutcome::Diverged));
    }

    #[test]
    fn steady_levels_at_reference() {
        let p = reference();
        let traj = steady_trajectory(&p, 10).unwrap();
        let lv = reconstruct_levels(&traj, 1.0, 1.0, &p).unwrap();
        let r0 = &lv.rows[0];
        let phi = 0.11121794871794872;
        assert_relative_eq!(r0.qm, (0.7 - 0.29625 - phi) * 10.0, max_relative = 1e-13);
        assert_relative_eq!(r0.p, phi * 10.0, max_relative = 1e-13);
        assert!(lv.max_flow_of_funds_gap() < 1e-10);
        assert!(lv.max_consumption_gap() < 1e-10);
        for w in lv.rows.windows(2) {
            assert_relative_eq!(w[1].m / w[0].m, 1.1, max_relative = 1e-15);
            assert_eq!(w[1].k, w[0].k_next);
        }
    }

    #[test]
    fn no_money_growth_means_no_transfers() {
        let p = ModelParams { mu: 0.0, ..reference() };
        let lv = reconstruct_levels(&steady_trajectory(&p, 5).unwrap(), 1.0, 1.0, &p).unwrap();
        assert!(lv.rows.iter().all(|r| r.transfer == 0.0));
    }

    #[test]
    fn shock_at_reference_point() {
        let p = reference();
        let r = epsilon_shock(&p, 0.01, 5, 40, 1.0, 1.0).unwrap();
        assert!(r.checks.all_hold(5));
        assert!(r.new_steady.g_gross < 2.9625);
        assert_eq!(r.checks.capital_crossover, Some(6));
        assert!(r.checks.output_crossover.unwrap() > 5);
        assert!((r.checks.long_run_growth - r.checks.new_steady_growth).abs() < 1e-9 * r.checks.new_steady_growth);
        for t in 0..=5 {
            assert_eq!(r.baseline.rows[t].k, r.shocked.rows[t].k);
        }
        assert!(r.shocked.max_flow_of_funds_gap() < 1e-10);
        assert!(r.shocked.max_consumption_gap() < 1e-10);
    }

    #[test]
    fn null_shock_gives_identical_paths() {
        let p = reference();
        let r = epsilon_shock(&p, 0.0, 3, 10, 1.0, 1.0).unwrap();
        assert_eq!(r.baseline, r.shocked);
    }
}
