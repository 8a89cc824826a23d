//! Real estate produced with labour and land: the labour split and the
//! entrepreneur income coefficient it implies.
//!
//! The core model uses this extension only through the coefficient on `K` in
//! entrepreneur income, which replaces `eta (1 - alpha) A`.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::params::{derive_constants, ModelParams};
use crate::roots::bisect;
use crate::scalar::{to_f64, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mobility {
    /// Workers move freely, so wages equalize across sectors.
    Mobile,
    /// Real-estate employment is fixed at `nx_fixed`.
    Immobile,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaborParams<T> {
    /// Labour share in real estate.
    pub rho: T,
    pub base: ModelParams<T>,
    pub mobility: Mobility,
    /// Real-estate employment for [`Mobility::Immobile`]; ignored otherwise.
    pub nx_fixed: Option<T>,
}

impl<T: Scalar> LaborParams<T> {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if !(self.rho > T::zero() && self.rho < T::one()) {
            return Err(ModelError::Domain {
                field: "rho",
                value: to_f64(self.rho),
                reason: "must lie in (0, 1)",
            });
        }
        if self.mobility == Mobility::Immobile {
            match self.nx_fixed {
                Some(n) if n > T::zero() && n < T::one() => {}
                Some(n) => {
                    return Err(ModelError::Domain {
                        field: "nx_fixed",
                        value: to_f64(n),
                        reason: "must lie in (0, 1)",
                    })
                }
                None => return Err(ModelError::Invalid("immobile labour needs nx_fixed".into())),
            }
        }
        Ok(())
    }

    /// `eps a`, the scale of real-estate productivity.
    pub fn land_scale(&self) -> T {
        self.base.eps * self.base.a
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaborShare<T> {
    /// Real-estate employment `N^X`.
    pub nx: T,
    /// `|w^X - w^K| / w^K` at `nx`; zero when flagged.
    pub wage_gap: T,
    /// Set when `eps = 0`: no real-estate labour demand, `N^X = 0` by convention.
    pub zero_by_convention: bool,
}

/// `(w^K, w^X)` at real-estate employment `n`.
pub fn sector_wages<T: Scalar>(lp: &LaborParams<T>, n: T) -> Result<(T, T)> {
    let c = derive_constants(&lp.base)?;
    let one = T::one();
    let alpha = lp.base.alpha;
    let wk = (one - alpha) * c.productivity * (one - n).powf(-alpha);
    let wx = lp.rho * lp.land_scale() * n.powf(lp.rho - one);
    Ok((wk, wx))
}

/// Real-estate employment equalizing wages across sectors (mobile labour).
pub fn solve_labor_share<T: Scalar>(lp: &LaborParams<T>) -> Result<LaborShare<T>> {
    lp.validate()?;
    if lp.mobility != Mobility::Mobile {
        return Err(ModelError::Invalid("labour share is solved only for mobile labour".into()));
    }
    if lp.base.eps == T::zero() {
        return Ok(LaborShare {
            nx: T::zero(),
            wage_gap: T::zero(),
            zero_by_convention: true,
        });
    }
    let gap = |n: T| -> Result<T> {
        let (wk, wx) = sector_wages(lp, n)?;
        Ok(wk - wx)
    };
    // w^K - w^X rises from -inf at 0 to +inf at 1
    let lo = T::min_positive_value().sqrt();
    let hi = T::one() - T::epsilon();
    let root = bisect(gap, lo, hi, T::zero(), 4000)?;
    let (wk, wx) = sector_wages(lp, root.x)?;
    Ok(LaborShare {
        nx: root.x,
        wage_gap: (wx - wk).abs() / wk,
        zero_by_convention: false,
    })
}

/// Entrepreneur income per unit of aggregate capital.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncomeCoefficient<T> {
    pub coefficient: T,
    pub nx: T,
    /// True when the mobile solution was set to `N^X = 0` because `eps = 0`.
    pub zero_by_convention: bool,
}

pub fn income_coefficient<T: Scalar>(lp: &LaborParams<T>) -> Result<IncomeCoefficient<T>> {
    lp.validate()?;
    let c = derive_constants(&lp.base)?;
    let one = T::one();
    let alpha = lp.base.alpha;
    let eta = lp.base.eta;
    match lp.mobility {
        Mobility::Mobile => {
            let share = solve_labor_share(lp)?;
            let nk = one - share.nx;
            Ok(IncomeCoefficient {
                coefficient: eta * (one - alpha) * c.productivity * nk.powf(-alpha),
                nx: share.nx,
                zero_by_convention: share.zero_by_convention,
            })
        }
        Mobility::Immobile => {
            let nx = lp.nx_fixed.expect("validated");
            let nk = one - nx;
            let coefficient =
                eta * (lp.rho * lp.land_scale() * nx.powf(lp.rho) + (one - alpha) * c.productivity * nk.powf(one - alpha));
            Ok(IncomeCoefficient {
                coefficient,
                nx,
                zero_by_convention: false,
            })
        }
    }
}

/// Total entrepreneur income at capital `k`; linear in `k`.
pub fn entrepreneur_income<T: Scalar>(lp: &LaborParams<T>, k: T) -> Result<T> {
    Ok(income_coefficient(lp)?.coefficient * k)
}

/// The core parameters with `eta` rescaled so that `eta (1 - alpha) A` equals
/// the extension's income coefficient.
pub fn core_params<T: Scalar>(lp: &LaborParams<T>) -> Result<ModelParams<T>> {
    let c = derive_constants(&lp.base)?;
    let coef = income_coefficient(lp)?.coefficient;
    let p = ModelParams {
        eta: coef / ((T::one() - lp.base.alpha) * c.productivity),
        ..lp.base
    };
    p.validate()?;
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::technology_for_productivity;
    use approx::assert_relative_eq;

    fn mobile(land_scale: f64, rho: f64) -> LaborParams<f64> {
        let base = ModelParams::<f64>::reference();
        LaborParams {
            rho,
            base: ModelParams { eps: land_scale / base.a, ..base },
            mobility: Mobility::Mobile,
            nx_fixed: None,
        }
    }

    #[test]
    fn reference_labor_share() {
        let lp = mobile(7.0, 0.5);
        let s = solve_labor_share(&lp).unwrap();
        // independent oracle (Brent on the same condition); 0.213 to two figures
        assert_relative_eq!(s.nx, 0.21603239440465347, max_relative = 1e-12);
        assert!((s.nx - 0.213).abs() < 5e-3);
        assert!(s.wage_gap < 1e-10);
        let (wk, wx) = sector_wages(&lp, s.nx).unwrap();
        assert_relative_eq!(wk, wx, max_relative = 1e-12);
    }

    #[test]
    fn residual_changes_sign_once_on_a_fine_grid() {
        let lp = mobile(7.0, 0.5);
        let f = |n: f64| sector_wages(&lp, n).map(|(k, x)| k - x);
        let cells = crate::roots::sign_change_cells(f, 1e-9, 1.0 - 1e-9, 1024).unwrap();
        assert_eq!(cells.len(), 1);
    }

    #[test]
    fn vanishing_land_scale_needs_no_labor() {
        let a = solve_labor_share(&mobile(1e-6, 0.5)).unwrap().nx;
        let b = solve_labor_share(&mobile(1e-9, 0.5)).unwrap().nx;
        assert!(b < a && a < 1e-9);
    }

    #[test]
    fn common_scale_leaves_the_share_unchanged() {
        let base = mobile(7.0, 0.5);
        // doubling A doubles the capital-sector wage; double eps a alongside
        let alpha = base.base.alpha;
        let a2 = technology_for_productivity(20.0, alpha);
        let scaled = LaborParams {
            base: ModelParams { a: a2, eps: 14.0 / a2, ..base.base },
            ..base
        };
        let n1 = solve_labor_share(&base).unwrap().nx;
        let n2 = solve_labor_share(&scaled).unwrap().nx;
        assert_relative_eq!(n1, n2, max_relative = 1e-12);
    }

    #[test]
    fn zero_eps_is_flagged_and_recovers_the_core_coefficient() {
        let lp = mobile(0.0, 0.5);
        let s = solve_labor_share(&lp).unwrap();
        assert!(s.zero_by_convention);
        let c = income_coefficient(&lp).unwrap();
        assert_relative_eq!(c.coefficient, 3.5, max_relative = 1e-14);
    }

    #[test]
    fn mobile_income_coefficient() {
        let lp = mobile(7.0, 0.5);
        let c = income_coefficient(&lp).unwrap();
        assert_relative_eq!(c.coefficient, 3.5 * (1.0 - c.nx).powf(-0.3), max_relative = 1e-14);
        assert_relative_eq!(c.coefficient, 3.7651181509695837, max_relative = 1e-12);
        assert!((c.coefficient - 3.761).abs() < 5e-3);
    }

    #[test]
    fn immobile_at_the_mobile_allocation_coincides() {
        let lp = mobile(7.0, 0.5);
        let m = income_coefficient(&lp).unwrap();
        let im = LaborParams {
            mobility: Mobility::Immobile,
            nx_fixed: Some(m.nx),
            ..lp
        };
        let i = income_coefficient(&im).unwrap();
        assert_relative_eq!(i.coefficient, m.coefficient, max_relative = 1e-12);
    }

    #[test]
    fn income_is_linear_in_capital() {
        let lp = mobile(7.0, 0.5);
        let one = entrepreneur_income(&lp, 1.5).unwrap();
        let two = entrepreneur_income(&lp, 3.0).unwrap();
        assert_eq!(two, 2.0 * one);
    }

    #[test]
    fn immobile_rejects_boundary_allocations() {
        let lp = LaborParams {
            mobility: Mobility::Immobile,
            nx_fixed: Some(0.0),
            ..mobile(7.0, 0.5)
        };
        assert!(matches!(income_coefficient(&lp), Err(ModelError::Domain { field: "nx_fixed", .. })));
    }
}
