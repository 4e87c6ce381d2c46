//! Floating-point abstraction used throughout the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssignOps};

/// Scalar type the solvers are generic over.
///
/// This is [`Float`] plus the handful of conversions and bounds the estimation
/// code needs (assignment ops, summation, threading). Implemented for `f32`
/// and `f64`; the `f64` instantiations are re-exported as type aliases at the
/// crate root.
pub trait Scalar:
    Float + NumAssignOps + FromPrimitive + Sum + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` constant into this scalar type.
    ///
    /// Panics if the value is not representable, which cannot happen for the
    /// finite literals this crate feeds it.
    fn cast(v: f64) -> Self {
        Self::from_f64(v).expect("constant representable in scalar type")
    }

    /// Converts a count into this scalar type.
    fn of(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    /// Widens to `f64`, e.g. for text output.
    fn f64(self) -> f64;
}

impl Scalar for f64 {
    #[inline]
    fn f64(self) -> f64 {
        self
    }
}

impl Scalar for f32 {
    #[inline]
    fn f64(self) -> f64 {
        self as f64
    }
}
