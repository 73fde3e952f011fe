//! Scalar abstraction for the numeric kernels.
//!
//! Everything in this crate is generic over a floating-point scalar so the
//! same code paths serve `f32` and `f64`. The toolkit itself runs in `f64`
//! (see the aliases at the crate root); `f32` exists for callers that want
//! cheaper arithmetic and can live with the precision.

use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Debug + Display + LowerExp + Default + Send + Sync + 'static
{
    /// Lossy cast from an `f64` literal. Panics only for exotic scalars that
    /// cannot represent finite `f64` values at all, which neither `f32` nor
    /// `f64` is.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 must convert to scalar")
    }

    /// Cast from a machine integer (grid sizes, power exponents).
    fn of_i32(k: i32) -> Self {
        Self::from_i32(k).expect("i32 must convert to scalar")
    }

    /// Round-trip into `f64` for reporting and serialization.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("scalar must convert to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}
