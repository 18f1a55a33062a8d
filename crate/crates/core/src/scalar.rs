//! Floating point scalar abstraction shared by the tensor and rotation math.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive};

/// Real scalar used by the convention-conversion code: `f32` or `f64`.
///
/// The fixed tolerances of the format are stated for double precision.
/// Single precision gets looser values scaled to its epsilon.
pub trait Real:
    Float + FloatConst + FromPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Unit-norm and orthogonality tolerance for quaternions, axes and DCMs.
    const VALIDATION_TOL: f64;
    /// `|sin(beta)|` below which Euler extraction is treated as gimbal-locked.
    const GIMBAL_TOL: f64;
    /// Relative threshold under which convention parameters are undefined.
    const DEGENERACY_TOL: f64;

    /// Converts an `f64` literal. Total for every finite input.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("finite literal")
    }

    #[inline]
    fn validation_tol() -> Self {
        Self::lit(Self::VALIDATION_TOL)
    }

    #[inline]
    fn gimbal_tol() -> Self {
        Self::lit(Self::GIMBAL_TOL)
    }

    #[inline]
    fn degeneracy_tol() -> Self {
        Self::lit(Self::DEGENERACY_TOL)
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    const VALIDATION_TOL: f64 = 1e-9;
    const GIMBAL_TOL: f64 = 1e-10;
    const DEGENERACY_TOL: f64 = 1e-12;
}

impl Real for f32 {
    const VALIDATION_TOL: f64 = 1e-4;
    const GIMBAL_TOL: f64 = 1e-5;
    const DEGENERACY_TOL: f64 = 1e-6;
}
