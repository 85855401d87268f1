use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point type the solver and the models are generic over.
///
/// The tolerances apply to the internally scaled problem, so they are
/// absolute values in units of order one.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Primal feasibility tolerance.
    fn feas_tol() -> Self;
    /// Reduced-cost (optimality) tolerance.
    fn opt_tol() -> Self;
    /// Smallest pivot magnitude accepted in ratio tests.
    fn pivot_tol() -> Self;
    /// Below this a basis column is treated as linearly dependent.
    fn singular_tol() -> Self;
    /// Distance from 0 or 1 under which a binary is taken as integral.
    fn int_tol() -> Self;

    /// Lossy conversion from `f64` used for literals.
    #[inline]
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    fn feas_tol() -> Self {
        1e-7
    }
    fn opt_tol() -> Self {
        1e-7
    }
    fn pivot_tol() -> Self {
        1e-9
    }
    fn singular_tol() -> Self {
        1e-11
    }
    fn int_tol() -> Self {
        1e-6
    }
}

impl Scalar for f32 {
    fn feas_tol() -> Self {
        1e-4
    }
    fn opt_tol() -> Self {
        1e-4
    }
    fn pivot_tol() -> Self {
        1e-5
    }
    fn singular_tol() -> Self {
        1e-6
    }
    fn int_tol() -> Self {
        1e-3
    }
}
