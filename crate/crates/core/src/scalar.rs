//! Floating-point abstraction for the scalar-level math.
//!
//! The closed-form coefficient algebra and the plane cell fields are written
//! against this trait so they can be evaluated in `f32` or `f64`. The finite
//! element lane is pinned to `f64` (see the crate root aliases).

use std::fmt::{Debug, Display};
use std::ops::{AddAssign, MulAssign, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + AddAssign + SubAssign + MulAssign + Debug + Display + 'static
{
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Lossy conversion of an `f64` literal into the working scalar.
#[inline]
pub fn lit<S: Scalar>(x: f64) -> S {
    S::from_f64(x).expect("f64 literal representable in scalar type")
}
