use num_traits::{Float, FloatConst, FromPrimitive};
use std::fmt::Debug;

/// Floating point scalar accepted by the angular and quadrature layers.
pub trait Scalar: Float + FloatConst + FromPrimitive + Debug + Send + Sync + 'static {
    fn lit(x: f64) -> Self {
        Self::from_f64(x).unwrap()
    }

    fn from_usize_exact(n: usize) -> Self {
        Self::from_usize(n).unwrap()
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
