//! Scalar abstraction shared by every solver in the crate.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point type the model can be evaluated in (`f32` or `f64`).
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
}

impl<T> Scalar for T where
    T: Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
}

/// Converts an `f64` literal into the working scalar type.
#[inline]
pub fn lit<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("literal representable in scalar type")
}

/// Lossy conversion used for diagnostics and error payloads.
#[inline]
pub fn to_f64<T: Scalar>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// `max(spec_value, k * machine_epsilon)` so that tolerances stay attainable in `f32`.
#[inline]
pub(crate) fn attainable<T: Scalar>(spec_value: f64, eps_multiple: f64) -> T {
    let floor = T::epsilon() * lit(eps_multiple);
    lit::<T>(spec_value).max(floor)
}

/// Relative difference `|a - b| / max(|a|, |b|, tiny)`.
#[inline]
pub fn rel_diff<T: Scalar>(a: T, b: T) -> T {
    let scale = a.abs().max(b.abs()).max(T::min_positive_value());
    (a - b).abs() / scale
}
