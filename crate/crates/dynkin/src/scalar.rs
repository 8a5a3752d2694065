//! Scalar abstraction over the arithmetic the solver runs in.
//!
//! Every algorithm in this crate is written against an ordered field rather
//! than a concrete float type. Two instantiations are first class:
//!
//! * `f64` — the default working mode. Set classifications (which states
//!   count as "stopped", which defect signs count as zero) are made with an
//!   absolute tolerance derived from [`Scalar::tolerance_unit`].
//! * [`num_rational::BigRational`] — exact arithmetic for certification
//!   runs. Its tolerance unit is zero, so every comparison downstream
//!   becomes exact and the solver's set iterates are provably correct for
//!   the given rational data.
//!
//! `f32` is also implemented for completeness with a much coarser tolerance
//! unit; it is not recommended for anything beyond quick experiments.

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{Num, NumAssign, Signed, ToPrimitive};

/// An ordered field the solver can compute in.
///
/// The supertraits supply plain ring/field arithmetic via `num-traits`; the
/// methods here cover what the generic code additionally needs: a tolerance
/// base unit, and conversions to/from `f64` for I/O and reporting.
pub trait Scalar:
    Clone + PartialOrd + Num + NumAssign + Signed + Debug + Display + Send + Sync + 'static
{
    /// Base unit for absolute comparison tolerances.
    ///
    /// Tolerances in this crate are `unit * scale` with a problem-derived
    /// `scale >= 1`. Exact types return zero, which turns every tolerance
    /// test into an exact comparison.
    fn tolerance_unit() -> Self;

    /// Conversion from `f64`. Exact whenever the target can represent the
    /// value (rationals represent every finite double exactly).
    ///
    /// The argument must be finite.
    fn from_f64(value: f64) -> Self;

    /// Nearest `f64`, used for reports and CSV output. May round.
    fn to_f64(&self) -> f64;

    /// False only for IEEE NaN/infinities; exact types are always finite.
    fn is_finite_value(&self) -> bool;
}

impl Scalar for f64 {
    fn tolerance_unit() -> Self {
        1e-9
    }

    fn from_f64(value: f64) -> Self {
        value
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
}

impl Scalar for f32 {
    // f32 carries ~7 decimal digits; after an LU solve little more than four
    // survive, hence the coarse unit.
    fn tolerance_unit() -> Self {
        1e-4
    }

    fn from_f64(value: f64) -> Self {
        value as f32
    }

    fn to_f64(&self) -> f64 {
        f64::from(*self)
    }

    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
}

impl Scalar for BigRational {
    fn tolerance_unit() -> Self {
        BigRational::from_integer(BigInt::from(0))
    }

    fn from_f64(value: f64) -> Self {
        Ratio::from_float(value).expect("finite float required for rational conversion")
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn is_finite_value(&self) -> bool {
        true
    }
}

/// The larger of two scalars. Inputs must be comparable (no NaN).
pub fn max_of<S: Scalar>(a: S, b: S) -> S {
    if b > a {
        b
    } else {
        a
    }
}

/// Sup norm `max_x |v(x)|`; zero for an empty slice.
pub fn sup_norm<S: Scalar>(v: &[S]) -> S {
    let mut best = S::zero();
    for x in v {
        best = max_of(best, x.abs());
    }
    best
}

/// Sup distance `max_x |a(x) - b(x)|` of two equal-length slices.
pub fn sup_distance<S: Scalar>(a: &[S], b: &[S]) -> S {
    debug_assert_eq!(a.len(), b.len());
    let mut best = S::zero();
    for (x, y) in a.iter().zip(b) {
        best = max_of(best, (x.clone() - y.clone()).abs());
    }
    best
}
