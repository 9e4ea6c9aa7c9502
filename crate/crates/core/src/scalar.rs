//! Scalar abstraction shared by every numerical routine in the crate.
//!
//! All matrix and estimator code is written against [`Real`], which is
//! implemented for `f32` and `f64`. Special functions of the normal
//! distribution are evaluated in `f64` regardless of the working precision.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::num::ParseFloatError;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point working precision.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + LowerExp
    + Default
    + FromStr<Err = ParseFloatError>
    + Send
    + Sync
    + 'static
{
    /// Relative asymmetry that is silently repaired before factorization.
    fn symmetry_tolerance() -> Self;

    /// Number of significant decimal digits needed for a value-exact round trip.
    const ROUND_TRIP_DIGITS: usize;

    /// Eigenvalues (unordered) and column-major eigenvectors of the
    /// symmetric row-major `n × n` matrix `a`, read from its lower triangle.
    /// `None` when the iteration limit is hit.
    fn symmetric_eigen(n: usize, a: &[Self]) -> Option<(Vec<Self>, Vec<Self>)>;

    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 is representable")
    }

    #[inline]
    fn of_usize(x: usize) -> Self {
        Self::from_usize(x).expect("usize is representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("float converts to f64")
    }
}

/// nalgebra's Householder + implicit QR solver, with an iteration cap so
/// non-convergence surfaces as an error instead of a hang.
macro_rules! nalgebra_eigen {
    ($t:ty) => {
        fn symmetric_eigen(n: usize, a: &[$t]) -> Option<(Vec<$t>, Vec<$t>)> {
            let m = nalgebra::DMatrix::from_row_slice(n, n, a);
            let e = nalgebra::linalg::SymmetricEigen::try_new(m, <$t>::EPSILON, 1000 + 100 * n)?;
            Some((e.eigenvalues.as_slice().to_vec(), e.eigenvectors.as_slice().to_vec()))
        }
    };
}

impl Real for f64 {
    const ROUND_TRIP_DIGITS: usize = 17;

    nalgebra_eigen!(f64);

    fn symmetry_tolerance() -> Self {
        1e-8
    }
}

impl Real for f32 {
    const ROUND_TRIP_DIGITS: usize = 9;

    nalgebra_eigen!(f32);

    fn symmetry_tolerance() -> Self {
        64.0 * f32::EPSILON
    }
}

/// Dot product of two equally long slices.
#[inline]
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = T::zero();
    for (x, y) in a.iter().zip(b) {
        acc += *x * *y;
    }
    acc
}

/// Formats `x` in scientific notation with enough digits to re-parse it exactly.
pub fn format_exact<T: Real>(x: T) -> String {
    format!("{:.*e}", T::ROUND_TRIP_DIGITS - 1, x)
}
