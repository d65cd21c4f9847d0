//! The floating-point abstraction the analytic code is written against.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// A real scalar: `f32` or `f64`.
///
/// Default tolerances are per type, since the `f64` targets (1e-12 on
/// Lambert-W residuals, 1e-10 on roots) are out of reach for `f32`.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Residual tolerance for Lambert-W round trips.
    const LAMBERT_TOL: Self;
    /// Default residual tolerance for `solve_scalar`.
    const ROOT_TOL: Self;
    /// Default relative tolerance for adaptive quadrature.
    const QUAD_TOL: Self;

    /// Converts an `f64` literal. Every `f64` is representable (possibly
    /// rounded) in both implementors, so this never fails.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal converts to scalar")
    }

    #[inline]
    fn from_u64_lossy(n: u64) -> Self {
        Self::from_u64(n).expect("u64 converts to scalar")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    const LAMBERT_TOL: Self = 1e-12;
    const ROOT_TOL: Self = 1e-10;
    const QUAD_TOL: Self = 1e-10;
}

impl Scalar for f32 {
    const LAMBERT_TOL: Self = 1e-5;
    const ROOT_TOL: Self = 1e-5;
    const QUAD_TOL: Self = 1e-5;
}
