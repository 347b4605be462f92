//! Scalar abstraction for the linear-algebra and gate layers.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Real scalar the dense complex kernel is generic over.
///
/// `f32` and `f64` both implement it; the spin-physics layers pin `f64`
/// through the crate-root aliases.
pub trait Scalar:
    Float
    + FloatConst
    + NumAssign
    + FromPrimitive
    + Sum
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`, for literals inside generic code.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 literal")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
