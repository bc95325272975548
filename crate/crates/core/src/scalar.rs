//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt;

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};
use rustfft::FftNum;

/// Floating point type the simulation machinery is generic over: `f32` or `f64`.
///
/// The tolerances quoted throughout the crate (1e-8 and tighter) assume `f64`;
/// `f32` works end to end but at single-precision accuracy.
pub trait Real: RealField + FftNum + FromPrimitive + ToPrimitive + Copy + fmt::Display {
    /// Converts an `f64` literal. Infallible for the two implementors.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar converts to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}
