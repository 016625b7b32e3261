//! Scalar fields the library is generic over.
//!
//! Every algebraic construction (parameter maps, residue matrices, curvature,
//! gauge transformations) works over [`Scalar`], so the same code runs in
//! double-precision complex arithmetic and in exact rational arithmetic.

use std::fmt::Debug;
use std::ops::Neg;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{Num, Signed, ToPrimitive};

/// Exact rational scalar.
pub type Rational = BigRational;

/// Relative tolerance used by [`Scalar::approx_eq`] for floating scalars.
pub const FLOAT_EQ_TOL: f64 = 1e-9;

pub trait Scalar: Num + Clone + Debug + Neg<Output = Self> + Send + Sync + 'static {
    fn from_i64(v: i64) -> Self;

    /// Absolute value as a double (used for norms and reporting only).
    fn magnitude(&self) -> f64;

    fn to_complex(&self) -> Complex64;

    /// `Some(k)` when the value is the integer `k <= 0`.
    fn nonpositive_integer(&self) -> Option<i64>;

    /// Exact equality for exact scalars, relative tolerance for floats.
    fn approx_eq(&self, other: &Self) -> bool;

    /// True when the scalar type carries no rounding error.
    fn is_exact() -> bool;

    fn approx_zero(&self) -> bool {
        self.approx_eq(&Self::zero())
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_i64(num) / Self::from_i64(den)
    }
}

impl Scalar for Complex64 {
    fn from_i64(v: i64) -> Self {
        Complex64::new(v as f64, 0.0)
    }

    fn magnitude(&self) -> f64 {
        self.norm()
    }

    fn to_complex(&self) -> Complex64 {
        *self
    }

    fn nonpositive_integer(&self) -> Option<i64> {
        let r = self.re.round();
        let tol = 1e-12 * self.re.abs().max(1.0);
        if self.im.abs() <= tol && (self.re - r).abs() <= tol && r <= 0.0 {
            Some(r as i64)
        } else {
            None
        }
    }

    fn approx_eq(&self, other: &Self) -> bool {
        let scale = self.norm().max(other.norm()).max(1.0);
        (self - other).norm() <= FLOAT_EQ_TOL * scale
    }

    fn is_exact() -> bool {
        false
    }
}

impl Scalar for Rational {
    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn magnitude(&self) -> f64 {
        self.abs().to_f64().unwrap_or(f64::INFINITY)
    }

    fn to_complex(&self) -> Complex64 {
        Complex64::new(self.to_f64().unwrap_or(f64::NAN), 0.0)
    }

    fn nonpositive_integer(&self) -> Option<i64> {
        if self.is_integer() && !self.is_positive() {
            self.to_integer().to_i64()
        } else {
            None
        }
    }

    fn approx_eq(&self, other: &Self) -> bool {
        self == other
    }

    fn is_exact() -> bool {
        true
    }
}

/// Build an exact rational `num/den`.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nonpositive_integer_detection() {
        assert_eq!(Complex64::new(0.0, 0.0).nonpositive_integer(), Some(0));
        assert_eq!(Complex64::new(-3.0, 0.0).nonpositive_integer(), Some(-3));
        assert_eq!(Complex64::new(-3.0, 0.1).nonpositive_integer(), None);
        assert_eq!(Complex64::new(2.0, 0.0).nonpositive_integer(), None);
        assert_eq!(rat(-4, 2).nonpositive_integer(), Some(-2));
        assert_eq!(rat(-1, 2).nonpositive_integer(), None);
        assert_eq!(rat(0, 5).nonpositive_integer(), Some(0));
    }

    #[test]
    fn rational_equality_is_exact() {
        assert!(rat(1, 3).approx_eq(&rat(2, 6)));
        assert!(!rat(1, 3).approx_eq(&rat(333_333_333, 1_000_000_000)));
    }
}
