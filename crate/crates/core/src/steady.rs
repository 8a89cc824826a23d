//! Balanced growth paths for the three variants and their diagnostic ratios.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::params::{check_assumptions, derive_constants, DerivedConstants, ModelParams, Variant};
use crate::quadratic::Quadratic;
use crate::scalar::{rel_diff, to_f64, Scalar};
use crate::tolerances::Tolerances;

/// A balanced growth path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyStateSolution<T> {
    /// Land value relative to `A K`.
    pub phi_star: T,
    /// `1 + g*`.
    pub g_gross: T,
    /// `1 + r*`.
    pub r_gross: T,
    /// Unleveraged land return, `(1 + g*)(1 + eps a^alpha / phi*)`.
    pub rx_star: T,
    /// Leveraged return on own funds invested in capital.
    pub lambda_star: T,
    /// Capital leverage factor.
    pub lev_capital: T,
    /// Own funds needed per unit of land value.
    pub downpayment_land: T,
    pub variant: Variant,
    /// Relative residual of the steady-state quadratic at `phi_star` (zero for closed forms).
    pub residual: T,
    /// The other root of the quadratic, if one was solved.
    pub companion_root: Option<T>,
}

/// Leverage quantities at a given safe rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeverageFactors<T> {
    pub lambda: T,
    pub rx: T,
    pub lev_capital: T,
    pub downpayment_land: T,
}

fn require_variant<T: Scalar>(p: &ModelParams<T>, expected: Variant) -> Result<()> {
    if p.variant == expected {
        Ok(())
    } else {
        Err(ModelError::WrongVariant {
            expected,
            found: p.variant,
        })
    }
}

fn require_assumptions<T: Scalar>(p: &ModelParams<T>) -> Result<()> {
    check_assumptions(p)?.into_result().map(|_| ())
}

/// Leverage and unleveraged land return implied by the no-arbitrage condition at `r_gross`.
pub fn leverage_factors<T: Scalar>(p: &ModelParams<T>, r_gross: T) -> Result<LeverageFactors<T>> {
    let c = derive_constants(p)?;
    leverage_factors_with(p, &c, r_gross)
}

pub(crate) fn leverage_factors_with<T: Scalar>(
    p: &ModelParams<T>,
    c: &DerivedConstants<T>,
    s: T,
) -> Result<LeverageFactors<T>> {
    let one = T::one();
    let rc = c.capital_return;
    if !(s > T::zero()) || !s.is_finite() {
        return Err(ModelError::LeverageUndefined {
            what: "gross rate must be positive",
        });
    }
    match p.variant {
        Variant::Main | Variant::Landless => {
            let slack = one - p.theta * rc / s;
            if !(slack > T::zero()) {
                return Err(ModelError::LeverageUndefined {
                    what: "1 + r must exceed theta Rc",
                });
            }
            let lev_capital = one / slack;
            let lambda = rc * (one - p.theta) * lev_capital;
            let den = one - p.theta_x + p.theta_x * lambda / s;
            if !(den > T::zero()) {
                return Err(ModelError::LeverageUndefined {
                    what: "land leverage denominator is not positive",
                });
            }
            Ok(LeverageFactors {
                lambda,
                rx: lambda / den,
                lev_capital,
                downpayment_land: (one - p.theta_x) / den,
            })
        }
        Variant::O3 => {
            if !(p.theta < one) || !(p.theta_x < one) {
                return Err(ModelError::LeverageUndefined {
                    what: "collateral fractions must be below one",
                });
            }
            let lev_capital = one / (one - p.theta);
            Ok(LeverageFactors {
                lambda: (rc - s * p.theta) * lev_capital,
                rx: (rc * (one - p.theta_x) + s * (p.theta_x - p.theta)) * lev_capital,
                lev_capital,
                downpayment_land: one - p.theta_x,
            })
        }
    }
}

/// `(lambda, R^x)` at the gross rate `r_gross`.
pub fn leveraged_returns<T: Scalar>(p: &ModelParams<T>, r_gross: T) -> Result<(T, T)> {
    leverage_factors(p, r_gross).map(|f| (f.lambda, f.rx))
}

/// Leveraged return on capital and on land at `r_gross`, in that order.
/// They are equal whenever `rx` comes from [`leveraged_returns`].
pub fn leveraged_pair<T: Scalar>(p: &ModelParams<T>, r_gross: T, rx: T) -> Result<(T, T)> {
    let c = derive_constants(p)?;
    let one = T::one();
    let rc = c.capital_return;
    match p.variant {
        Variant::Main | Variant::Landless => {
            let cap = rc * (one - p.theta) / (one - p.theta * rc / r_gross);
            let land = rx * (one - p.theta_x) / (one - p.theta_x * rx / r_gross);
            Ok((cap, land))
        }
        Variant::O3 => Ok((
            (rc - r_gross * p.theta) / (one - p.theta),
            (rx - r_gross * p.theta_x) / (one - p.theta_x),
        )),
    }
}

fn assemble<T: Scalar>(
    p: &ModelParams<T>,
    c: &DerivedConstants<T>,
    phi: T,
    s: T,
    rx_star: T,
    residual: T,
    companion_root: Option<T>,
) -> Result<SteadyStateSolution<T>> {
    let lf = leverage_factors_with(p, c, s)?;
    let g_gross = s * (T::one() + p.mu);
    if !(g_gross > T::zero()) {
        return Err(ModelError::NonPositiveGrowth {
            growth: to_f64(g_gross),
        });
    }
    Ok(SteadyStateSolution {
        phi_star: phi,
        g_gross,
        r_gross: s,
        rx_star,
        lambda_star: lf.lambda,
        lev_capital: lf.lev_capital,
        downpayment_land: lf.downpayment_land,
        variant: p.variant,
        residual,
        companion_root,
    })
}

/// Closed-form steady state of the main model at `eps = 0`.
pub fn solve_eps_zero<T: Scalar>(p: &ModelParams<T>) -> Result<SteadyStateSolution<T>> {
    require_variant(p, Variant::Main)?;
    if p.eps != T::zero() {
        return Err(ModelError::Domain {
            field: "eps",
            value: to_f64(p.eps),
            reason: "closed form requires eps = 0",
        });
    }
    let c = derive_constants(p)?;
    require_assumptions(p)?;
    let one = T::one();
    let rc = c.capital_return;
    let m1 = one + p.mu;
    let spread = p.theta_x - p.theta;
    let s = rc / (one - p.theta_x) * ((one - p.theta) / m1 - spread);
    let phi = p.eta * (one - p.alpha) / (one - p.theta_x * m1)
        - rc * (one - p.theta) / (c.productivity * (one - p.theta_x));
    let g = rc / (one - p.theta_x) * (one - p.theta - spread * m1);
    let mut sol = assemble(p, &c, phi, s, g, T::zero(), None)?;
    // the growth closed form directly rather than s (1 + mu), so both closed forms are reported as written
    sol.g_gross = g;
    Ok(sol)
}

/// Steady-state quadratic in `phi` for the main model.
pub(crate) fn main_quadratic<T: Scalar>(p: &ModelParams<T>, c: &DerivedConstants<T>) -> Quadratic<T> {
    let one = T::one();
    let big_a = c.productivity;
    let e = c.land_term;
    let m1 = one + p.mu;
    let k = one - p.theta_x * m1;
    let b0 = c.capital_return * (one - p.theta) / (one - p.theta_x);
    let wage = p.eta * (one - p.alpha);
    let tx1 = p.theta_x * m1;
    Quadratic::new(
        big_a * k,
        -wage * big_a - big_a * tx1 * e + big_a * e * k + b0 * k,
        -e * (wage * big_a + big_a * tx1 * e + b0 * tx1),
    )
}

/// `1 + r*` from the land ratio, main model.
pub(crate) fn main_rate_from_phi<T: Scalar>(p: &ModelParams<T>, c: &DerivedConstants<T>, phi: T) -> T {
    let one = T::one();
    let rc = c.capital_return;
    let m1 = one + p.mu;
    rc / (one - p.theta_x) * ((one - p.theta) / (m1 * (one + c.land_term / phi)) - (p.theta_x - p.theta))
}

fn positive_root<T: Scalar>(q: &Quadratic<T>, tol: &Tolerances<T>) -> Result<(T, T, T)> {
    let (lo, hi) = q.real_roots().ok_or(ModelError::NoPositiveRoot {
        lo: f64::NAN,
        hi: f64::NAN,
    })?;
    if !(hi > T::zero()) || lo > T::zero() {
        return Err(ModelError::NoPositiveRoot {
            lo: to_f64(lo),
            hi: to_f64(hi),
        });
    }
    let residual = q.relative_residual(hi);
    if !(residual <= tol.residual) {
        return Err(ModelError::ResidualTooLarge {
            residual: to_f64(residual),
            tolerance: to_f64(tol.residual),
        });
    }
    Ok((hi, lo, residual))
}

/// Main-model steady state for any `eps >= 0` via the positive root of the quadratic.
pub fn solve_general<T: Scalar>(p: &ModelParams<T>) -> Result<SteadyStateSolution<T>> {
    solve_general_with(p, &Tolerances::standard())
}

pub fn solve_general_with<T: Scalar>(p: &ModelParams<T>, tol: &Tolerances<T>) -> Result<SteadyStateSolution<T>> {
    require_variant(p, Variant::Main)?;
    let c = derive_constants(p)?;
    require_assumptions(p)?;
    let q = main_quadratic(p, &c);
    let (phi, other, residual) = positive_root(&q, tol)?;
    let s = main_rate_from_phi(p, &c, phi);
    let g = s * (T::one() + p.mu);
    let rx = g * (T::one() + c.land_term / phi);
    assemble(p, &c, phi, s, rx, residual, Some(other))
}

/// Landless economy: capital and money only.
pub fn solve_landless<T: Scalar>(p: &ModelParams<T>) -> Result<SteadyStateSolution<T>> {
    solve_landless_with(p, &Tolerances::standard())
}

pub fn solve_landless_with<T: Scalar>(p: &ModelParams<T>, tol: &Tolerances<T>) -> Result<SteadyStateSolution<T>> {
    require_variant(p, Variant::Landless)?;
    let c = derive_constants(p)?;
    let one = T::one();
    let rc = c.capital_return;
    let m1 = one + p.mu;
    let wage = p.eta * (one - p.alpha) * c.productivity;
    let s = wage / m1 + p.theta * rc;
    if !(s > p.theta * rc) {
        return Err(ModelError::Domain {
            field: "theta",
            value: to_f64(p.theta),
            reason: "1 + r* <= theta Rc: capital leverage is infinite",
        });
    }
    let sol = assemble(p, &c, T::zero(), s, T::nan(), T::zero(), None)?;
    let lf = leverage_factors_with(p, &c, s)?;
    let consistency = wage * lf.lev_capital;
    let gap = rel_diff(consistency, sol.g_gross);
    if !(gap <= tol.identity) {
        return Err(ModelError::ResidualTooLarge {
            residual: to_f64(gap),
            tolerance: to_f64(tol.identity),
        });
    }
    Ok(SteadyStateSolution { rx_star: lf.rx, ..sol })
}

/// Steady-state quadratic in `phi` for the O3 variant.
pub(crate) fn o3_quadratic<T: Scalar>(p: &ModelParams<T>, c: &DerivedConstants<T>) -> Quadratic<T> {
    let one = T::one();
    let big_a = c.productivity;
    let e = c.land_term;
    let m1 = one + p.mu;
    let h = one - p.theta_x + p.mu * (one - p.theta);
    let wage = p.eta * (one - p.alpha);
    Quadratic::new(
        big_a * (one - p.theta_x) * h / (one - p.theta),
        -big_a * wage * h / (one - p.theta) + c.capital_return * (one - p.theta_x) * m1 + big_a * (one - p.theta_x) * m1 * e,
        -big_a * wage * m1 * e,
    )
}

/// O3 growth factor at land ratio `phi`.
pub(crate) fn o3_growth<T: Scalar>(p: &ModelParams<T>, c: &DerivedConstants<T>, phi: T) -> T {
    let one = T::one();
    c.productivity / (one - p.theta) * (p.eta * (one - p.alpha) - (one - p.theta_x) * phi)
}

/// `(phi*, 1 + g*)` for O3 without checking assumptions. Used by the assumption check itself.
pub(crate) fn o3_unchecked<T: Scalar>(p: &ModelParams<T>, c: &DerivedConstants<T>) -> Result<(T, T)> {
    let q = o3_quadratic(p, c);
    let (phi, _, _) = positive_root(&q, &Tolerances::standard())?;
    Ok((phi, o3_growth(p, c, phi)))
}

/// O3 steady state: collateral valued at current asset values.
pub fn solve_o3<T: Scalar>(p: &ModelParams<T>) -> Result<SteadyStateSolution<T>> {
    solve_o3_with(p, &Tolerances::standard())
}

pub fn solve_o3_with<T: Scalar>(p: &ModelParams<T>, tol: &Tolerances<T>) -> Result<SteadyStateSolution<T>> {
    require_variant(p, Variant::O3)?;
    let c = derive_constants(p)?;
    require_assumptions(p)?;
    let q = o3_quadratic(p, &c);
    let (phi, other, residual) = positive_root(&q, tol)?;
    let g = o3_growth(p, &c, phi);
    let s = g / (T::one() + p.mu);
    let rx = g * (T::one() + c.land_term / phi);
    let mut sol = assemble(p, &c, phi, s, rx, residual, Some(other))?;
    sol.g_gross = g;
    Ok(sol)
}

/// Dispatches on `p.variant`. The main model uses the quadratic for every `eps`.
pub fn solve<T: Scalar>(p: &ModelParams<T>) -> Result<SteadyStateSolution<T>> {
    solve_with(p, &Tolerances::standard())
}

pub fn solve_with<T: Scalar>(p: &ModelParams<T>, tol: &Tolerances<T>) -> Result<SteadyStateSolution<T>> {
    match p.variant {
        Variant::Main => solve_general_with(p, tol),
        Variant::O3 => solve_o3_with(p, tol),
        Variant::Landless => solve_landless_with(p, tol),
    }
}

/// Land price-rent ratio in the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum PriceRent<T> {
    Finite(T),
    /// Zero land dividend (`eps = 0`).
    Infinite,
}

/// Price-rent ratio of a full-participation benchmark economy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum FullParticipation<T> {
    Finite(T),
    /// `1 + g* >= 1 + r*`: land would have an infinite price, so no equilibrium exists.
    NoEquilibrium,
}

/// Which links of `Rc > R^x* >= 1 + g* > 1 + r*` hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ordering {
    pub capital_over_land: bool,
    pub land_at_least_growth: bool,
    pub growth_over_rate: bool,
}

impl Ordering {
    pub fn ok(&self) -> bool {
        self.capital_over_land && self.land_at_least_growth && self.growth_over_rate
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyDiagnostics<T> {
    /// Debt over output.
    pub credit_gdp: T,
    /// Real money balances over `A K`.
    pub money_share: T,
    pub price_rent_model: PriceRent<T>,
    pub price_rent_full_participation: FullParticipation<T>,
    pub ordering: Ordering,
    pub ordering_ok: bool,
    /// Multiplier on the capital borrowing constraint.
    pub multiplier: T,
    /// Same multiplier computed from the land side; equals `multiplier` under no-arbitrage.
    pub multiplier_land: Option<T>,
}

/// Diagnostic ratios of a solved steady state. Degenerate cases are flagged, never errors.
pub fn diagnostics<T: Scalar>(sol: &SteadyStateSolution<T>, p: &ModelParams<T>) -> Result<SteadyDiagnostics<T>> {
    let c = derive_constants(p)?;
    let one = T::one();
    let big_a = c.productivity;
    let rc = c.capital_return;
    let e = c.land_term;
    let s = sol.r_gross;
    let g = sol.g_gross;
    let phi = sol.phi_star;
    let y_over_ak = one + e;

    let credit_gdp = match sol.variant {
        Variant::Main | Variant::Landless => {
            (p.theta * rc / s * g / big_a + p.theta_x * sol.rx_star / s * phi) / y_over_ak
        }
        Variant::O3 => (p.theta * g / big_a + p.theta_x * phi) / y_over_ak,
    };
    let money_share = (one - p.alpha) - g / big_a - phi;

    let price_rent_model = if e > T::zero() {
        PriceRent::Finite(phi / e)
    } else {
        PriceRent::Infinite
    };
    let price_rent_full_participation = if g >= s {
        FullParticipation::NoEquilibrium
    } else {
        FullParticipation::Finite(g / (s - g))
    };

    let ordering = match sol.variant {
        Variant::Landless => Ordering {
            capital_over_land: rc > g,
            land_at_least_growth: true,
            growth_over_rate: g > s,
        },
        _ => Ordering {
            capital_over_land: rc > sol.rx_star,
            land_at_least_growth: sol.rx_star >= g,
            growth_over_rate: g > s,
        },
    };

    let (multiplier, multiplier_land) = match sol.variant {
        Variant::Main => (
            (rc - s) / (s - p.theta * rc),
            Some((sol.rx_star - s) / (s - p.theta_x * sol.rx_star)),
        ),
        Variant::Landless => ((rc - s) / (s - p.theta * rc), None),
        Variant::O3 => (
            (rc - s) / (one - p.theta),
            Some((sol.rx_star - s) / (one - p.theta_x)),
        ),
    };

    Ok(SteadyDiagnostics {
        credit_gdp,
        money_share,
        price_rent_model,
        price_rent_full_participation,
        ordering,
        ordering_ok: ordering.ok(),
        multiplier,
        multiplier_land,
    })
}
