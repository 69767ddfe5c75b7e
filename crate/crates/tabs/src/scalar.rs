//! Numeric scalar abstraction for valuations.
//!
//! Constraint coefficients are always integers; valuations and atom
//! evaluation are generic over the scalar so the oracle can run on exact
//! rationals while property tests may use floats. The canonical exact
//! scalar is [`crate::Rat`].

use num_traits::{FromPrimitive, Num, Signed};

/// Scalar type usable as a variable value.
pub trait Scalar: Clone + PartialOrd + Num + Signed + FromPrimitive {
    fn from_int(i: i64) -> Self;
    fn from_ratio(num: i64, den: i64) -> Self;
}

impl Scalar for num_rational::Rational64 {
    fn from_int(i: i64) -> Self {
        num_rational::Rational64::from_integer(i)
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        num_rational::Rational64::new(num, den)
    }
}

impl Scalar for f64 {
    fn from_int(i: i64) -> Self {
        i as f64
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
}

impl Scalar for f32 {
    fn from_int(i: i64) -> Self {
        i as f32
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f32 / den as f32
    }
}
