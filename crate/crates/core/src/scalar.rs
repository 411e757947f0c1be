//! Floating point abstraction shared by every numerical kernel.

use std::fmt;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use rustfft::FftNum;

/// Scalar type for maps, posteriors and metric arithmetic: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + FftNum + Default + fmt::Display + Send + Sync + 'static
{
    /// Converts an `f64` literal into this scalar type.
    #[inline]
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 is representable in every Scalar type")
    }

    #[inline]
    fn of_usize(v: usize) -> Self {
        Self::from_usize(v).expect("usize is representable in every Scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Half, the neutral similarity value.
    #[inline]
    fn half() -> Self {
        Self::of(0.5)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
