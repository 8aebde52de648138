//! Scalar abstraction for the deterministic numerics.
//!
//! Lattice operators, the semidiscrete integrators and the dense/banded
//! linear algebra are written against [`Real`] so that they run in `f32`
//! as well as `f64`. Stochastic simulation and ensemble statistics are
//! `f64` only.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point type usable by the lattice operators and integrators.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Values are always representable up to rounding.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }

    /// Relative residual accepted from a direct linear solve.
    ///
    /// Equals `1e-12` for `f64`.
    #[inline]
    fn solve_tolerance() -> Self {
        Self::epsilon() * Self::lit(4503.599627370496)
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_tolerance_is_1e_minus_12_in_double() {
        assert!((f64::solve_tolerance() - 1e-12).abs() < 1e-24);
        assert!(f32::solve_tolerance() > 1e-4 && f32::solve_tolerance() < 1e-3);
    }
}
