//! Scalar abstraction for the numeric kernels.
//!
//! The math modules (dynamics, networks, PCA) are generic over [`Real`] so
//! they work for `f32` and `f64` alike; the training loop and the persistence
//! layer instantiate everything at `f64` via the aliases in the crate root.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Send + Sync + 'static
{
    /// Conversion from an `f64` constant.
    fn real(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 constant")
    }
}

impl Real for f32 {}
impl Real for f64 {}
