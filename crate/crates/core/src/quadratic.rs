//! Cancellation-safe real roots of `a x² + b x + c`.

use crate::scalar::{lit, Scalar};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadratic<T> {
    pub a: T,
    pub b: T,
    pub c: T,
}

impl<T: Scalar> Quadratic<T> {
    pub fn new(a: T, b: T, c: T) -> Self {
        Self { a, b, c }
    }

    pub fn eval(&self, x: T) -> T {
        (self.a * x + self.b) * x + self.c
    }

    /// `|q(x)|` divided by the magnitude of the terms that were summed.
    pub fn relative_residual(&self, x: T) -> T {
        let scale = (self.a * x * x).abs() + (self.b * x).abs() + self.c.abs();
        if scale == T::zero() {
            T::zero()
        } else {
            self.eval(x).abs() / scale
        }
    }

    /// Both real roots in ascending order, or `None` when the discriminant is negative.
    ///
    /// Uses `q = -(b + sign(b)·√disc)/2`, roots `q/a` and `c/q`, so neither root is
    /// formed as a difference of nearly equal numbers.
    pub fn real_roots(&self) -> Option<(T, T)> {
        let four = lit::<T>(4.0);
        let half = lit::<T>(0.5);
        let disc = self.b * self.b - four * self.a * self.c;
        if disc < T::zero() || !disc.is_finite() {
            return None;
        }
        let sign_b = if self.b < T::zero() { -T::one() } else { T::one() };
        let q = -half * (self.b + sign_b * disc.sqrt());
        let (r1, r2) = if q == T::zero() {
            // b = 0 and c = 0: double root at zero.
            (T::zero(), T::zero())
        } else {
            (q / self.a, self.c / q)
        };
        Some(if r1 <= r2 { (r1, r2) } else { (r2, r1) })
    }
}
