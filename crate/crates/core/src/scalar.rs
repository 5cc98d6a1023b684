//! Floating-point scalar abstraction for all numeric code in the crate.

use core::fmt::{Debug, Display};
use core::iter::Sum;
use core::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar: `f32` or `f64`.
///
/// Everything the numeric kernels need, bundled once so signatures stay
/// short. Randomness is always drawn in `f64` and converted through
/// [`Scalar::from_f64_lossy`], which keeps seeded runs reproducible across
/// scalar types.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Converts a finite `f64` to this scalar, rounding as needed.
    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 converts to any supported scalar")
    }

    /// Converts a `usize` to this scalar (exact for the sizes used here).
    fn from_usize_lossy(v: usize) -> Self {
        Self::from_usize(v).expect("usize converts to any supported scalar")
    }

    /// Converts this scalar to `f64` (lossless for f32 and f64).
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("f32/f64 always convert to f64")
    }
}

impl<T> Scalar for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + AddAssign
        + SubAssign
        + MulAssign
        + DivAssign
        + Sum
        + Default
        + Debug
        + Display
        + Send
        + Sync
        + 'static
{
}
