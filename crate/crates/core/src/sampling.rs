//! Deterministic rejection sampling of admissible parameter points.
//!
//! Draw `i` is generated from its own ChaCha8 stream (key = seed, stream = i),
//! so the accepted list depends only on `(box, n, seed)` and not on how the
//! draws are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::params::{check_assumptions, ModelParams, ParamField, Variant};
use crate::scalar::{lit, to_f64, Scalar};

/// Closed interval `[lo, hi]`; `lo == hi` pins the field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: Scalar> Interval<T> {
    pub fn new(lo: T, hi: T) -> Self {
        Self { lo, hi }
    }

    pub fn point(x: T) -> Self {
        Self { lo: x, hi: x }
    }

    fn at(&self, u: f64) -> T {
        if self.lo == self.hi {
            self.lo
        } else {
            self.lo + (self.hi - self.lo) * lit(u)
        }
    }
}

/// One interval per primitive plus the variant every sampled point carries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamBox<T> {
    pub a: Interval<T>,
    pub alpha: Interval<T>,
    pub eps: Interval<T>,
    pub eta: Interval<T>,
    pub delta: Interval<T>,
    pub theta: Interval<T>,
    pub theta_x: Interval<T>,
    pub mu: Interval<T>,
    #[serde(default)]
    pub variant: Variant,
}

impl<T: Scalar> ParamBox<T> {
    pub fn point(p: &ModelParams<T>) -> Self {
        let mut b = Self::from_fn(p.variant, |f| Interval::point(p.get(f)));
        b.variant = p.variant;
        b
    }

    /// `p.field * (1 -/+ rel)` on every field, clipped to `[0, 1]` for the
    /// closed unit-interval fields (`delta`, `theta`, `theta_x`).
    pub fn around(p: &ModelParams<T>, rel: T) -> Self {
        let one = T::one();
        Self::from_fn(p.variant, |f| {
            let v = p.get(f);
            let (x, y) = (v * (one - rel), v * (one + rel));
            let (mut lo, mut hi) = (x.min(y), x.max(y));
            if matches!(f, ParamField::Delta | ParamField::Theta | ParamField::ThetaX) {
                lo = lo.max(T::zero());
                hi = hi.min(one);
            }
            Interval::new(lo, hi)
        })
    }

    pub fn from_fn(variant: Variant, mut f: impl FnMut(ParamField) -> Interval<T>) -> Self {
        Self {
            a: f(ParamField::A),
            alpha: f(ParamField::Alpha),
            eps: f(ParamField::Eps),
            eta: f(ParamField::Eta),
            delta: f(ParamField::Delta),
            theta: f(ParamField::Theta),
            theta_x: f(ParamField::ThetaX),
            mu: f(ParamField::Mu),
            variant,
        }
    }

    pub fn get(&self, field: ParamField) -> Interval<T> {
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

    pub fn with(mut self, field: ParamField, iv: Interval<T>) -> Self {
        match field {
            ParamField::A => self.a = iv,
            ParamField::Alpha => self.alpha = iv,
            ParamField::Eps => self.eps = iv,
            ParamField::Eta => self.eta = iv,
            ParamField::Delta => self.delta = iv,
            ParamField::Theta => self.theta = iv,
            ParamField::ThetaX => self.theta_x = iv,
            ParamField::Mu => self.mu = iv,
        }
        self
    }

    fn corner(&self, high: bool) -> ModelParams<T> {
        let pick = |iv: Interval<T>| if high { iv.hi } else { iv.lo };
        ModelParams {
            a: pick(self.a),
            alpha: pick(self.alpha),
            eps: pick(self.eps),
            eta: pick(self.eta),
            delta: pick(self.delta),
            theta: pick(self.theta),
            theta_x: pick(self.theta_x),
            mu: pick(self.mu),
            variant: self.variant,
        }
    }

    /// Every interval is ordered and lies inside its field's range.
    pub fn validate(&self) -> Result<()> {
        for f in ParamField::ALL {
            let iv = self.get(f);
            if !(iv.lo <= iv.hi) {
                return Err(ModelError::Invalid(format!(
                    "interval for `{}` is empty: [{}, {}]",
                    f.name(),
                    iv.lo,
                    iv.hi
                )));
            }
        }
        // every field range is an interval, so checking both corners covers the box
        self.corner(false).validate()?;
        self.corner(true).validate()
    }

    /// Draw number `index` for `seed`, before any admissibility check.
    pub fn draw(&self, seed: u64, index: u64) -> ModelParams<T> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let mut next = |iv: Interval<T>| iv.at(rng.gen::<f64>());
        ModelParams {
            a: next(self.a),
            alpha: next(self.alpha),
            eps: next(self.eps),
            eta: next(self.eta),
            delta: next(self.delta),
            theta: next(self.theta),
            theta_x: next(self.theta_x),
            mu: next(self.mu),
            variant: self.variant,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleOptions {
    /// Draws allowed before the box is declared infeasible.
    pub max_draws: u64,
    /// Draws evaluated per parallel batch.
    pub batch: u64,
}

impl Default for SampleOptions {
    fn default() -> Self {
        Self {
            max_draws: 1_000_000,
            batch: 4096,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample<T> {
    pub points: Vec<ModelParams<T>>,
    /// Draw index of each accepted point.
    pub draw_indices: Vec<u64>,
    pub draws: u64,
    pub rejection_rate: f64,
}

fn admissible<T: Scalar>(p: &ModelParams<T>) -> bool {
    p.validate().is_ok() && check_assumptions(p).map_or(false, |r| r.all_ok)
}

/// Exactly `n` admissible points for `bx.variant`, deterministic in `seed`.
pub fn sample_parameters<T: Scalar>(bx: &ParamBox<T>, n: usize, seed: u64) -> Result<Sample<T>> {
    sample_parameters_with(bx, n, seed, SampleOptions::default())
}

pub fn sample_parameters_with<T: Scalar>(
    bx: &ParamBox<T>,
    n: usize,
    seed: u64,
    opts: SampleOptions,
) -> Result<Sample<T>> {
    if n == 0 {
        return Err(ModelError::Invalid("sample size must be at least 1".into()));
    }
    bx.validate()?;
    let batch = opts.batch.max(1);
    let mut points = Vec::with_capacity(n);
    let mut draw_indices = Vec::with_capacity(n);
    let mut next = 0u64;
    while points.len() < n && next < opts.max_draws {
        let end = (next + batch).min(opts.max_draws);
        let accepted: Vec<(u64, ModelParams<T>)> = (next..end)
            .into_par_iter()
            .filter_map(|i| {
                let p = bx.draw(seed, i);
                admissible(&p).then_some((i, p))
            })
            .collect();
        for (i, p) in accepted {
            if points.len() == n {
                break;
            }
            draw_indices.push(i);
            points.push(p);
        }
        next = end;
    }
    if points.len() < n {
        return Err(ModelError::InfeasibleBox {
            wanted: n,
            accepted: points.len(),
            draws: next,
        });
    }
    let draws = draw_indices.last().map_or(0, |i| i + 1);
    Ok(Sample {
        rejection_rate: 1.0 - n as f64 / draws as f64,
        points,
        draw_indices,
        draws,
    })
}

/// Human-readable summary of a box for report headers.
pub fn describe_box<T: Scalar>(bx: &ParamBox<T>) -> String {
    ParamField::ALL
        .iter()
        .map(|&f| {
            let iv = bx.get(f);
            format!("{}=[{},{}]", f.name(), to_f64(iv.lo), to_f64(iv.hi))
        })
        .collect::<Vec<_>>()
        .join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_box_repeats_the_point() {
        let p = ModelParams::<f64>::reference();
        let s = sample_parameters(&ParamBox::point(&p), 3, 0).unwrap();
        assert_eq!(s.points, vec![p; 3]);
        assert_eq!(s.rejection_rate, 0.0);
    }

    #[test]
    fn assumption_one_unsatisfiable_box_is_infeasible() {
        let p = ModelParams::<f64>::reference();
        let bx = ParamBox::point(&p)
            .with(ParamField::ThetaX, Interval::new(0.95, 1.0))
            .with(ParamField::Mu, Interval::new(0.2, 0.5));
        let opts = SampleOptions { max_draws: 20_000, batch: 4096 };
        match sample_parameters_with(&bx, 1, 1, opts) {
            Err(ModelError::InfeasibleBox { accepted: 0, draws: 20_000, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let bx = ParamBox::around(&ModelParams::<f64>::reference(), 0.1);
        let a = sample_parameters(&bx, 100, 7).unwrap();
        let b = sample_parameters(&bx, 100, 7).unwrap();
        assert_eq!(a, b);
        let bits = |s: &Sample<f64>| s.points.iter().map(|p| p.mu.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        let c = sample_parameters(&bx, 100, 8).unwrap();
        assert_ne!(a.points, c.points);
    }

    #[test]
    fn batch_size_does_not_change_the_sample() {
        let bx = ParamBox::around(&ModelParams::<f64>::reference(), 0.3);
        let a = sample_parameters_with(&bx, 50, 3, SampleOptions { max_draws: 1_000_000, batch: 7 }).unwrap();
        let b = sample_parameters_with(&bx, 50, 3, SampleOptions::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn every_sampled_point_passes_its_assumptions() {
        let bx = ParamBox::around(&ModelParams::<f64>::reference(), 0.3);
        for p in sample_parameters(&bx, 200, 11).unwrap().points {
            let r = check_assumptions(&p).unwrap();
            assert!(r.all_ok);
            assert!(r.gates.iter().all(|g| g.margin > 0.0));
        }
    }

    #[test]
    fn out_of_range_box_is_rejected() {
        let bx = ParamBox::point(&ModelParams::<f64>::reference()).with(ParamField::Alpha, Interval::new(0.0, 0.5));
        assert!(matches!(bx.validate(), Err(ModelError::Domain { field: "alpha", .. })));
        let bx = ParamBox::point(&ModelParams::<f64>::reference()).with(ParamField::Mu, Interval::new(0.5, 0.1));
        assert!(matches!(bx.validate(), Err(ModelError::Invalid(_))));
    }
}
