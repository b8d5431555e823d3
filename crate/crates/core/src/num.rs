//! Scalar abstraction shared by every solver and kernel.
//!
//! Fields are stored in single precision by default (matching the GPU
//! workloads being modelled), but all numerics are written against [`Real`]
//! so the same code runs in `f64` for reference comparisons.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar usable in field storage and stencil kernels.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Default + Debug + Display + Send + Sync + 'static
{
    /// Width in bytes of one stored value.
    const BYTES: usize;

    /// Smallest positive normal value.
    fn min_normal() -> Self;

    /// Approximate reciprocal square root (bit-level seed plus Newton steps).
    fn rsqrt_approx(self) -> Self;

    /// Converts an `f64` constant; panics only for values the type cannot hold.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("constant representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {
    const BYTES: usize = 4;

    fn min_normal() -> Self {
        f32::MIN_POSITIVE
    }

    #[inline]
    fn rsqrt_approx(self) -> Self {
        let half = 0.5 * self;
        let mut y = f32::from_bits(0x5f37_5a86 - (self.to_bits() >> 1));
        y = y * (1.5 - half * y * y);
        y = y * (1.5 - half * y * y);
        y * (1.5 - half * y * y)
    }
}

impl Real for f64 {
    const BYTES: usize = 8;

    fn min_normal() -> Self {
        f64::MIN_POSITIVE
    }

    #[inline]
    fn rsqrt_approx(self) -> Self {
        let half = 0.5 * self;
        let mut y = f64::from_bits(0x5fe6_eb50_c7b5_37a9 - (self.to_bits() >> 1));
        y = y * (1.5 - half * y * y);
        y = y * (1.5 - half * y * y);
        y = y * (1.5 - half * y * y);
        y * (1.5 - half * y * y)
    }
}
