//! Bracketing scalar root finders.
//!
//! [`brent`] is the workhorse: inverse quadratic / secant steps guarded by
//! bisection, so each iteration keeps a sign-changing bracket. [`bisect`]
//! is kept separate because a few callers want its monotone guarantees,
//! and tests use it as an oracle against [`brent`].

use crate::error::{ModelError, Result};
use crate::scalar::{lit, to_f64, Scalar};

/// A located root with the bracket the solver ended on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root<T> {
    pub x: T,
    pub fx: T,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct RootOptions<T> {
    /// Absolute tolerance on the root location. Zero means "to machine precision".
    pub xtol: T,
    pub max_iter: usize,
}

impl<T: Scalar> Default for RootOptions<T> {
    fn default() -> Self {
        Self {
            xtol: T::zero(),
            max_iter: 200,
        }
    }
}

fn checked<T: Scalar>(x: T, fx: T) -> Result<T> {
    if fx.is_finite() {
        Ok(fx)
    } else {
        Err(ModelError::Invalid(format!(
            "function value {} at x = {} is not finite",
            to_f64(fx),
            to_f64(x)
        )))
    }
}

/// Brent's method on `[lo, hi]`. `f(lo)` and `f(hi)` must differ in sign.
pub fn brent<T, F>(mut f: F, lo: T, hi: T, opts: RootOptions<T>) -> Result<Root<T>>
where
    T: Scalar,
    F: FnMut(T) -> Result<T>,
{
    let two = lit::<T>(2.0);
    let half = lit::<T>(0.5);
    let three = lit::<T>(3.0);

    let (mut a, mut b) = (lo, hi);
    let mut fa = checked(a, f(a)?)?;
    let mut fb = checked(b, f(b)?)?;
    if fa == T::zero() {
        return Ok(Root { x: a, fx: fa, iterations: 0 });
    }
    if fb == T::zero() {
        return Ok(Root { x: b, fx: fb, iterations: 0 });
    }
    if (fa > T::zero()) == (fb > T::zero()) {
        return Err(ModelError::NoRootInBracket {
            lo: to_f64(lo),
            hi: to_f64(hi),
        });
    }

    let (mut c, mut fc) = (b, fb);
    let mut d = b - a;
    let mut e = d;

    for iter in 1..=opts.max_iter {
        if (fb > T::zero()) == (fc > T::zero()) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }

        let tol1 = two * T::epsilon() * b.abs() + half * opts.xtol;
        let xm = half * (c - b);
        if xm.abs() <= tol1 || fb == T::zero() {
            return Ok(Root { x: b, fx: fb, iterations: iter });
        }

        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = two * xm * s;
                q = T::one() - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (two * xm * qq * (qq - r) - (b - a) * (r - T::one()));
                q = (qq - T::one()) * (r - T::one()) * (s - T::one());
            }
            if p > T::zero() {
                q = -q;
            }
            p = p.abs();
            let min1 = three * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if two * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }

        a = b;
        fa = fb;
        b = if d.abs() > tol1 {
            b + d
        } else if xm > T::zero() {
            b + tol1
        } else {
            b - tol1
        };
        fb = checked(b, f(b)?)?;
    }
    Err(ModelError::NoConvergence {
        iterations: opts.max_iter,
    })
}

/// Plain bisection until the bracket is narrower than `xtol` (or stops shrinking).
pub fn bisect<T, F>(mut f: F, lo: T, hi: T, xtol: T, max_iter: usize) -> Result<Root<T>>
where
    T: Scalar,
    F: FnMut(T) -> Result<T>,
{
    let (mut a, mut b) = (lo, hi);
    let fa = checked(a, f(a)?)?;
    let fb = checked(b, f(b)?)?;
    if fa == T::zero() {
        return Ok(Root { x: a, fx: fa, iterations: 0 });
    }
    if fb == T::zero() {
        return Ok(Root { x: b, fx: fb, iterations: 0 });
    }
    if (fa > T::zero()) == (fb > T::zero()) {
        return Err(ModelError::NoRootInBracket {
            lo: to_f64(lo),
            hi: to_f64(hi),
        });
    }
    let a_positive = fa > T::zero();
    let half = lit::<T>(0.5);
    let mut fm = fa;
    let mut m = a;
    for iter in 1..=max_iter {
        m = a + (b - a) * half;
        if m <= a || m >= b || (b - a) <= xtol {
            return Ok(Root { x: m, fx: checked(m, f(m)?)?, iterations: iter });
        }
        fm = checked(m, f(m)?)?;
        if fm == T::zero() {
            return Ok(Root { x: m, fx: fm, iterations: iter });
        }
        if (fm > T::zero()) == a_positive {
            a = m;
        } else {
            b = m;
        }
    }
    if (b - a) <= xtol {
        Ok(Root { x: m, fx: fm, iterations: max_iter })
    } else {
        Err(ModelError::NoConvergence { iterations: max_iter })
    }
}

/// Evaluates `f` on `n + 1` evenly spaced points and returns every cell whose
/// endpoints differ in sign (an exact zero on a grid point counts as a cell).
pub fn sign_change_cells<T, F>(mut f: F, lo: T, hi: T, n: usize) -> Result<Vec<(T, T)>>
where
    T: Scalar,
    F: FnMut(T) -> Result<T>,
{
    let step = (hi - lo) / lit::<T>(n as f64);
    let mut cells = Vec::new();
    let mut prev_x = lo;
    let mut prev_f = checked(lo, f(lo)?)?;
    for i in 1..=n {
        let x = if i == n { hi } else { lo + step * lit(i as f64) };
        let fx = checked(x, f(x)?)?;
        // a zero on an interior grid point belongs to the cell it starts
        let change = if prev_f == T::zero() {
            true
        } else if fx == T::zero() {
            i == n
        } else {
            (prev_f > T::zero()) != (fx > T::zero())
        };
        if change {
            cells.push((prev_x, x));
        }
        prev_x = x;
        prev_f = fx;
    }
    Ok(cells)
}

/// Root of `f` on `[lo, hi]` that must be the only sign change on an `n`-cell
/// scan grid. Several changes produce [`ModelError::AmbiguousRoot`].
pub fn unique_root_on_grid<T, F>(mut f: F, lo: T, hi: T, n: usize) -> Result<Root<T>>
where
    T: Scalar,
    F: FnMut(T) -> Result<T>,
{
    let cells = sign_change_cells(&mut f, lo, hi, n)?;
    match cells.as_slice() {
        [] => Err(ModelError::NoRootInBracket {
            lo: to_f64(lo),
            hi: to_f64(hi),
        }),
        [(a, b)] => brent(f, *a, *b, RootOptions::default()),
        many => Err(ModelError::AmbiguousRoot {
            sign_changes: many.len(),
        }),
    }
}

/// Grows `[lo, hi]` geometrically around its midpoint until `f` changes sign.
/// The lower end is never pushed below `floor`.
pub fn expand_bracket<T, F>(mut f: F, lo: T, hi: T, floor: T, max_expansions: usize) -> Result<(T, T)>
where
    T: Scalar,
    F: FnMut(T) -> Result<T>,
{
    let (mut a, mut b) = (lo.max(floor), hi);
    let two = lit::<T>(2.0);
    for _ in 0..max_expansions {
        let fa = f(a);
        let fb = f(b);
        if let (Ok(fa), Ok(fb)) = (&fa, &fb) {
            if fa.is_finite() && fb.is_finite() && (*fa > T::zero()) != (*fb > T::zero()) {
                return Ok((a, b));
            }
        }
        let width = b - a;
        a = (a - width).max(floor + (a - floor) / two);
        b = b + width;
    }
    Err(ModelError::NoRootInBracket {
        lo: to_f64(a),
        hi: to_f64(b),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ok<T>(x: T) -> Result<T> {
        Ok(x)
    }

    #[test]
    fn brent_finds_sqrt_two() {
        let r = brent(|x: f64| ok(x * x - 2.0), 0.0, 2.0, RootOptions::default()).unwrap();
        assert!((r.x - 2f64.sqrt()).abs() < 4.0 * f64::EPSILON);
    }

    #[test]
    fn brent_matches_bisection_oracle() {
        let f = |x: f64| ok(x.cos() - x);
        let b = brent(f, 0.0, 1.0, RootOptions::default()).unwrap();
        let o = bisect(f, 0.0, 1.0, 0.0, 200).unwrap();
        assert!((b.x - o.x).abs() < 1e-15);
        assert!(b.iterations < o.iterations);
    }

    #[test]
    fn brent_rejects_bracket_without_sign_change() {
        let err = brent(|x: f64| ok(x * x + 1.0), -1.0, 1.0, RootOptions::default()).unwrap_err();
        assert!(matches!(err, ModelError::NoRootInBracket { .. }));
    }

    #[test]
    fn brent_works_in_f32() {
        let r = brent(|x: f32| ok(x * x * x - 8.0), 0.0, 5.0, RootOptions::default()).unwrap();
        assert!((r.x - 2.0).abs() < 1e-5);
    }

    #[test]
    fn grid_scan_flags_multiple_roots() {
        let f = |x: f64| ok((x - 0.2) * (x - 0.5) * (x - 0.8));
        let err = unique_root_on_grid(f, 0.0, 1.0, 64).unwrap_err();
        assert_eq!(err, ModelError::AmbiguousRoot { sign_changes: 3 });
        let r = unique_root_on_grid(f, 0.35, 0.65, 64).unwrap();
        assert!((r.x - 0.5).abs() < 1e-15);
    }

    #[test]
    fn expansion_finds_distant_root() {
        let f = |x: f64| ok(x - 100.0);
        let (a, b) = expand_bracket(f, 1.0, 2.0, 0.0, 60).unwrap();
        assert!(a <= 100.0 && b >= 100.0);
    }

    #[test]
    fn expansion_respects_floor() {
        let f = |x: f64| ok(x - 1e-6);
        let (a, _) = expand_bracket(f, 1.0, 2.0, 0.0, 200).unwrap();
        assert!(a >= 0.0 && a < 1e-6);
    }
}
