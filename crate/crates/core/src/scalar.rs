//! Scalar abstraction shared by every solver in the crate.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use ndarray::ScalarOperand;
use num_traits::{Float, FromPrimitive, NumAssignOps, ToPrimitive};

/// Real floating-point scalar (`f32` or `f64`) the solvers are generic over.
///
/// Special functions used by the inference code (normal tails, quantiles)
/// are evaluated in `f64` and converted back.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssignOps
    + ScalarOperand
    + Sum
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + Default
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(v: usize) -> Self {
        Self::from_usize(v).expect("count representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// `sign(x) * max(|x| - a, 0)`.
#[inline]
pub fn soft_threshold<F: Scalar>(x: F, a: F) -> F {
    debug_assert!(a >= F::zero());
    if x > a {
        x - a
    } else if x < -a {
        x + a
    } else {
        F::zero()
    }
}
