//! Scalar abstractions shared by the numeric parts of the crate.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, Num};

/// A number supporting field arithmetic.
///
/// Implemented for the primitive floats and for exact rationals such as
/// `num_rational::Ratio<i64>`, so counts-based metrics can be computed
/// either approximately or exactly.
pub trait Scalar: Num + Copy + FromPrimitive + PartialOrd + Debug {}

impl<T> Scalar for T where T: Num + Copy + FromPrimitive + PartialOrd + Debug {}

/// A real-valued scalar, `f32` or `f64`.
pub trait Real: Scalar + Float + Display + Default + Send + Sync + 'static {}

impl Real for f32 {}
impl Real for f64 {}

/// Converts a count into the scalar type.
pub(crate) fn from_count<T: Scalar>(n: usize) -> T {
    T::from_usize(n).expect("count representable in scalar type")
}
