//! Model primitives, derived constants and the existence assumptions.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::scalar::{lit, to_f64, Scalar};
use crate::steady;

/// Which borrowing-constraint / land configuration is being solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Collateral valued at next-period returns; land is held by entrepreneurs.
    #[default]
    Main,
    /// Collateral valued at current asset values.
    O3,
    /// No land (`P_t = 0`, `eps = 0`): capital and money only.
    Landless,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Main => "main",
            Variant::O3 => "o3",
            Variant::Landless => "landless",
        })
    }
}

/// The eight primitives of the economy. Everything else is derived from these.
///
/// One period is one generation; `mu` and all rates are per period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams<T> {
    /// Technology level `a` in `chi(K) = a K`.
    pub a: T,
    /// Capital share.
    pub alpha: T,
    /// Land productivity relative to labour productivity.
    pub eps: T,
    /// Fraction of each cohort that are entrepreneurs.
    pub eta: T,
    /// Depreciation.
    pub delta: T,
    /// Pledgeable fraction of capital returns.
    pub theta: T,
    /// Pledgeable fraction of land returns.
    pub theta_x: T,
    /// Money growth rate.
    pub mu: T,
    #[serde(default)]
    pub variant: Variant,
}

/// Named access to the primitives, used by sweeps, sampling boxes and derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamField {
    A,
    Alpha,
    Eps,
    Eta,
    Delta,
    Theta,
    ThetaX,
    Mu,
}

impl ParamField {
    pub const ALL: [ParamField; 8] = [
        ParamField::A,
        ParamField::Alpha,
        ParamField::Eps,
        ParamField::Eta,
        ParamField::Delta,
        ParamField::Theta,
        ParamField::ThetaX,
        ParamField::Mu,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ParamField::A => "a",
            ParamField::Alpha => "alpha",
            ParamField::Eps => "eps",
            ParamField::Eta => "eta",
            ParamField::Delta => "delta",
            ParamField::Theta => "theta",
            ParamField::ThetaX => "theta_x",
            ParamField::Mu => "mu",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == name)
    }
}

impl<T: Scalar> ModelParams<T> {
    pub fn get(&self, field: ParamField) -> T {
        match field {
            ParamField::A => self.a,
            ParamField::Alpha => self.alpha,
            ParamField::Eps => self.eps,
            ParamField::Eta => self.eta,
            ParamField::Delta => self.delta,
            ParamField::Theta => self.theta,
            ParamField::ThetaX => self.theta_x,
            ParamField::Mu => self.mu,
        }
    }

    pub fn with(mut self, field: ParamField, value: T) -> Self {
        match field {
            ParamField::A => self.a = value,
            ParamField::Alpha => self.alpha = value,
            ParamField::Eps => self.eps = value,
            ParamField::Eta => self.eta = value,
            ParamField::Delta => self.delta = value,
            ParamField::Theta => self.theta = value,
            ParamField::ThetaX => self.theta_x = value,
            ParamField::Mu => self.mu = value,
        }
        self
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    /// Point used throughout the documentation and tests:
    /// `alpha = 0.3`, `A = 10`, `delta = 1`, `eta = 0.5`, `theta = 0.1`,
    /// `theta_x = 0.2`, `mu = 0.1`, `eps = 0`.
    pub fn reference() -> Self {
        let alpha = lit(0.3);
        Self {
            a: technology_for_productivity(lit(10.0), alpha),
            alpha,
            eps: T::zero(),
            eta: lit(0.5),
            delta: T::one(),
            theta: lit(0.1),
            theta_x: lit(0.2),
            mu: lit(0.1),
            variant: Variant::Main,
        }
    }

    /// Checks every range restriction on the primitives.
    pub fn validate(&self) -> Result<()> {
        fn domain<T: Scalar>(field: &'static str, v: T, reason: &'static str) -> ModelError {
            ModelError::Domain {
                field,
                value: to_f64(v),
                reason,
            }
        }
        let zero = T::zero();
        let one = T::one();
        for f in ParamField::ALL {
            let v = self.get(f);
            if !v.is_finite() {
                return Err(domain(f.name(), v, "must be finite"));
            }
        }
        if self.a <= zero {
            return Err(domain("a", self.a, "must be > 0"));
        }
        if self.alpha <= zero || self.alpha >= one {
            return Err(domain("alpha", self.alpha, "must lie in (0, 1)"));
        }
        if self.eps < zero {
            return Err(domain("eps", self.eps, "must be >= 0"));
        }
        if self.eta <= zero || self.eta >= one {
            return Err(domain("eta", self.eta, "must lie in (0, 1)"));
        }
        if self.delta < zero || self.delta > one {
            return Err(domain("delta", self.delta, "must lie in [0, 1]"));
        }
        if self.theta < zero || self.theta > one {
            return Err(domain("theta", self.theta, "must lie in [0, 1]"));
        }
        if self.theta_x < zero || self.theta_x > one {
            return Err(domain("theta_x", self.theta_x, "must lie in [0, 1]"));
        }
        if self.mu <= -one {
            return Err(domain("mu", self.mu, "must be > -1"));
        }
        if self.variant == Variant::Landless && self.eps != zero {
            return Err(domain("eps", self.eps, "landless economy requires eps = 0"));
        }
        Ok(())
    }
}

/// `a` such that `a^(1 - alpha) = productivity`.
pub fn technology_for_productivity<T: Scalar>(productivity: T, alpha: T) -> T {
    productivity.powf(T::one() / (T::one() - alpha))
}

/// Composite constants that every solver needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants<T> {
    /// `A = a^(1 - alpha)`.
    pub productivity: T,
    /// `Rc = alpha A + 1 - delta`, gross return per unit of capital.
    pub capital_return: T,
    /// `eps a^alpha`, land rent per unit of `A K`.
    pub land_term: T,
    /// `H = 1 - theta_x + mu (1 - theta)`; present for the O3 variant only.
    pub o3_h: Option<T>,
}

pub fn derive_constants<T: Scalar>(p: &ModelParams<T>) -> Result<DerivedConstants<T>> {
    p.validate()?;
    let one = T::one();
    let productivity = p.a.powf(one - p.alpha);
    let capital_return = p.alpha * productivity + one - p.delta;
    let land_term = if p.eps == T::zero() {
        T::zero()
    } else {
        p.eps * p.a.powf(p.alpha)
    };
    let o3_h = (p.variant == Variant::O3).then(|| one - p.theta_x + p.mu * (one - p.theta));
    Ok(DerivedConstants {
        productivity,
        capital_return,
        land_term,
        o3_h,
    })
}

/// Identifies one inequality of the existence assumptions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateId {
    /// `1 > theta_x (1 + mu)`.
    A1,
    /// Positive value of money at the steady state.
    A2Left,
    /// Positive land ratio at the steady state.
    A2Right,
    /// O3: positive land ratio.
    A3,
    /// O3: positive value of money (evaluated at the steady state).
    A4,
    /// Landless: `1 + r* > theta Rc`.
    LandlessLeverage,
    /// Landless: positive value of money.
    LandlessMoney,
    /// Landless: borrowing constraint binds, `Rc > 1 + r*`.
    LandlessBinding,
}

impl GateId {
    pub fn name(self) -> &'static str {
        match self {
            GateId::A1 => "a1",
            GateId::A2Left => "a2_left",
            GateId::A2Right => "a2_right",
            GateId::A3 => "a3",
            GateId::A4 => "a4",
            GateId::LandlessLeverage => "landless_leverage",
            GateId::LandlessMoney => "landless_money",
            GateId::LandlessBinding => "landless_binding",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gate<T> {
    pub id: GateId,
    /// Left-hand side minus right-hand side; the gate holds iff this is > 0.
    pub margin: T,
}

impl<T: Scalar> Gate<T> {
    pub fn ok(&self) -> bool {
        self.margin > T::zero()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport<T> {
    pub variant: Variant,
    pub gates: Vec<Gate<T>>,
    pub all_ok: bool,
    /// Set when a gate had to be evaluated at a solved steady state.
    pub depends_on_steady_state: bool,
}

impl<T: Scalar> AssumptionReport<T> {
    pub fn gate(&self, id: GateId) -> Option<&Gate<T>> {
        self.gates.iter().find(|g| g.id == id)
    }

    pub fn ok(&self, id: GateId) -> Option<bool> {
        self.gate(id).map(Gate::ok)
    }

    pub fn margin(&self, id: GateId) -> Option<T> {
        self.gate(id).map(|g| g.margin)
    }

    /// First failing gate, for error reporting.
    pub fn first_failure(&self) -> Option<&Gate<T>> {
        self.gates.iter().find(|g| !g.ok())
    }

    pub fn into_result(self) -> Result<Self> {
        match self.first_failure() {
            Some(g) => Err(ModelError::AssumptionViolated {
                gate: g.id.name(),
                margin: to_f64(g.margin),
            }),
            None => Ok(self),
        }
    }
}

/// Evaluates the existence assumptions for `p.variant`. Never fails on a
/// violated inequality; only invalid primitives are errors.
pub fn check_assumptions<T: Scalar>(p: &ModelParams<T>) -> Result<AssumptionReport<T>> {
    let c = derive_constants(p)?;
    let one = T::one();
    let big_a = c.productivity;
    let rc = c.capital_return;
    let m1 = one + p.mu;
    let wage_share = p.eta * (one - p.alpha) * big_a;
    let mut depends_on_steady_state = false;

    let gates = match p.variant {
        Variant::Main => {
            let k = one - p.theta_x * m1;
            let mid = wage_share / k;
            let left = big_a * (one - p.alpha) + rc * (p.theta_x - p.theta) * m1 / (one - p.theta_x);
            let right = rc * (one - p.theta) / (one - p.theta_x);
            vec![
                Gate { id: GateId::A1, margin: k },
                Gate { id: GateId::A2Left, margin: left - mid },
                Gate { id: GateId::A2Right, margin: mid - right },
            ]
        }
        Variant::O3 => {
            let h = c.o3_h.expect("O3 constants carry H");
            let a3 = wage_share / (one - p.theta_x) - rc * (one - p.theta) * m1 / h;
            let a4 = if a3 > T::zero() {
                depends_on_steady_state = true;
                o3_money_margin(p, &c)
            } else {
                T::nan()
            };
            vec![Gate { id: GateId::A3, margin: a3 }, Gate { id: GateId::A4, margin: a4 }]
        }
        Variant::Landless => {
            let r_gross = wage_share / m1 + p.theta * rc;
            let g_gross = r_gross * m1;
            let money = (one - p.alpha) - g_gross / big_a;
            vec![
                Gate { id: GateId::LandlessLeverage, margin: r_gross - p.theta * rc },
                Gate { id: GateId::LandlessMoney, margin: money },
                Gate { id: GateId::LandlessBinding, margin: rc - r_gross },
            ]
        }
    };
    let all_ok = gates.iter().all(Gate::ok);
    Ok(AssumptionReport {
        variant: p.variant,
        gates,
        all_ok,
        depends_on_steady_state,
    })
}

/// Money-value margin `A(1-alpha) - (1+g*) - A phi*` at the O3 steady state.
/// At `eps = 0` the closed-form limit is used as well and the smaller margin kept.
fn o3_money_margin<T: Scalar>(p: &ModelParams<T>, c: &DerivedConstants<T>) -> T {
    let one = T::one();
    let big_a = c.productivity;
    let exact = match steady::o3_unchecked(p, c) {
        Ok((phi, g_gross)) => big_a * (one - p.alpha) - g_gross - big_a * phi,
        Err(_) => T::nan(),
    };
    if p.eps == T::zero() {
        let limit = big_a * (one - p.alpha) - p.eta * (one - p.alpha) * big_a / (one - p.theta_x);
        limit.min(exact)
    } else {
        exact
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_constants_at_reference() {
        let p = ModelParams::<f64>::reference();
        let c = derive_constants(&p).unwrap();
        // a = 10^(10/7), cross-checked with the logarithm identity
        let via_log = ((1.0 - p.alpha) * p.a.ln()).exp();
        assert!((c.productivity - 10.0).abs() < 1e-13);
        assert!((c.productivity - via_log).abs() < 1e-13);
        assert!((c.capital_return - 3.0).abs() < 1e-13);
        assert_eq!(c.land_term, 0.0);
        assert!(c.o3_h.is_none());
    }

    #[test]
    fn full_depreciation_capital_return_is_alpha_a() {
        let alpha = 0.5;
        let p = ModelParams::<f64> {
            a: technology_for_productivity(2.0, alpha),
            alpha,
            ..ModelParams::reference()
        };
        let c = derive_constants(&p).unwrap();
        assert!((c.capital_return - 1.0).abs() < 1e-15);
    }

    #[test]
    fn o3_h_composite() {
        let p = ModelParams::<f64>::reference().with_variant(Variant::O3);
        let h = derive_constants(&p).unwrap().o3_h.unwrap();
        assert!((h - 0.89).abs() < 1e-15);
    }

    #[test]
    fn domain_errors() {
        let p = ModelParams::<f64>::reference();
        assert!(matches!(
            derive_constants(&ModelParams { a: 0.0, ..p }),
            Err(ModelError::Domain { field: "a", .. })
        ));
        assert!(matches!(
            derive_constants(&ModelParams { alpha: 1.0, ..p }),
            Err(ModelError::Domain { field: "alpha", .. })
        ));
        assert!(matches!(
            derive_constants(&ModelParams { eps: 0.1, ..p }.with_variant(Variant::Landless)),
            Err(ModelError::Domain { field: "eps", .. })
        ));
    }

    #[test]
    fn main_assumptions_at_reference() {
        let r = check_assumptions(&ModelParams::<f64>::reference()).unwrap();
        assert!(r.all_ok);
        // 7.4125 > 4.4872 > 3.375
        let mid = 3.5 / 0.78;
        assert!((r.margin(GateId::A2Left).unwrap() - (7.4125 - mid)).abs() < 1e-12);
        assert!((r.margin(GateId::A2Right).unwrap() - (mid - 3.375)).abs() < 1e-12);
        assert!((r.margin(GateId::A1).unwrap() - 0.78).abs() < 1e-15);
    }

    #[test]
    fn assumption_one_violation() {
        // theta_x (1 + mu) = 0.8 * 1.3 = 1.04
        let p = ModelParams { theta_x: 0.8, mu: 0.3, ..ModelParams::<f64>::reference() };
        let r = check_assumptions(&p).unwrap();
        assert_eq!(r.ok(GateId::A1), Some(false));
        assert!(!r.all_ok);
        assert!(r.into_result().is_err());
    }

    #[test]
    fn o3_assumptions_at_reference() {
        let p = ModelParams::<f64>::reference().with_variant(Variant::O3);
        let r = check_assumptions(&p).unwrap();
        assert!(r.all_ok);
        assert!(r.depends_on_steady_state);
        // 4.375 > 2.97 / 0.89
        assert!((r.margin(GateId::A3).unwrap() - (4.375 - 2.97 / 0.89)).abs() < 1e-12);
        // simplified money-value gate: 7 > 4.375
        assert!((r.margin(GateId::A4).unwrap() - 2.625).abs() < 1e-12);
    }

    #[test]
    fn o3_assumption_four_exact_binds_when_theta_exceeds_theta_x() {
        let p = ModelParams {
            theta: 0.3,
            theta_x: 0.1,
            ..ModelParams::<f64>::reference()
        }
        .with_variant(Variant::O3);
        let c = derive_constants(&p).unwrap();
        let (phi, g) = steady::o3_unchecked(&p, &c).unwrap();
        let exact = 10.0 * 0.7 - g - 10.0 * phi;
        let r = check_assumptions(&p).unwrap();
        assert!((r.margin(GateId::A4).unwrap() - exact).abs() < 1e-12);
    }

    #[test]
    fn landless_reference_point_does_not_bind() {
        let p = ModelParams::<f64>::reference().with_variant(Variant::Landless);
        let r = check_assumptions(&p).unwrap();
        assert_eq!(r.ok(GateId::LandlessLeverage), Some(true));
        assert_eq!(r.ok(GateId::LandlessMoney), Some(true));
        assert_eq!(r.ok(GateId::LandlessBinding), Some(false));
    }

    #[test]
    fn derive_constants_is_pure() {
        let p = ModelParams::<f64>::reference();
        let a = derive_constants(&p).unwrap();
        let b = derive_constants(&p).unwrap();
        assert_eq!(a.productivity.to_bits(), b.productivity.to_bits());
        assert_eq!(a.capital_return.to_bits(), b.capital_return.to_bits());
    }

    #[test]
    fn field_names_round_trip() {
        for f in ParamField::ALL {
            assert_eq!(ParamField::from_name(f.name()), Some(f));
        }
    }
}
