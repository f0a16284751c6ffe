//! Floating-point abstraction shared by the geometric kernels.

use std::fmt::Debug;

use num_traits::{Float, FloatConst, FromPrimitive};

/// Real scalar the geometric kernels are generic over: `f32` or `f64`.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + Debug + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    /// Machine epsilon scaled into this type.
    #[inline]
    fn eps() -> Self {
        Self::epsilon()
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
