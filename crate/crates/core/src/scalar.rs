//! Scalar abstraction shared by the polynomial and moment layers.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real field the polynomial and moment code is generic over.
///
/// Implemented for `f32` and `f64`. The conic solver and everything built on
/// it run in `f64`; convert with [`Scalar::to_f64_lossy`] at that boundary.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Sum + Default + Send + Sync + 'static
{
    /// Coefficients with magnitude below this are dropped after arithmetic.
    fn cleanup_threshold() -> Self;

    fn from_usize_lossy(v: usize) -> Self {
        Self::from_usize(v).expect("usize representable as float")
    }

    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).expect("f64 representable as scalar")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {
    fn cleanup_threshold() -> Self {
        1e-14
    }
}

impl Scalar for f64 {
    fn cleanup_threshold() -> Self {
        1e-14
    }
}
