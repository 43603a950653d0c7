//! Scalar abstraction: all geometry and probability math is generic over a
//! floating point type.

use num_traits::{Float, FromPrimitive};
use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Floating point scalar: f32 or f64.
pub trait Real: Float + FromPrimitive + Sum + Debug + Display + 'static {}

impl Real for f32 {}
impl Real for f64 {}

/// Lossless-enough cast from f64 literals into the working scalar.
#[inline]
pub fn real<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 -> scalar cast")
}

/// Cast a count into the working scalar.
#[inline]
pub fn real_of_usize<T: Real>(n: usize) -> T {
    T::from_usize(n).expect("usize -> scalar cast")
}
