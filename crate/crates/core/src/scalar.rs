//! Scalar abstraction shared by every numerical module.
//!
//! All field, geometry and solver code is written against [`Real`], so the
//! same pipeline runs in `f64` (the default used by the runner and the
//! acceptance suite) or in `f32` for quick low-precision experiments.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, NumAssign};
use rustfft::FftNum;

/// Floating point scalar usable by the spectral machinery.
pub trait Real:
    Float + FloatConst + FftNum + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal. Exact for `f64`, rounded for `f32`.
    fn lit(x: f64) -> Self;

    fn as_f64(self) -> f64;

    fn of_usize(k: usize) -> Self {
        Self::lit(k as f64)
    }

    /// Machine epsilon of the type.
    fn eps() -> Self {
        <Self as Float>::epsilon()
    }
}

impl Real for f32 {
    #[inline]
    fn lit(x: f64) -> Self {
        x as f32
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    #[inline]
    fn lit(x: f64) -> Self {
        x
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}
