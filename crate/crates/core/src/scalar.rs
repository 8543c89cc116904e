//! Scalar abstraction for the closed-form parts of the crate.
//!
//! Threshold schedules, confidence indices and the reference bounds are all
//! closed-form expressions, so they are written once over [`Real`] and
//! instantiated for `f32` and `f64`. The Monte-Carlo machinery runs in `f64`.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar usable by the closed-form routines.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from `f64`; used for literal constants.
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("f64 literal representable in scalar type")
    }

    /// Conversion from a count.
    fn count(value: u64) -> Self {
        Self::from_u64(value).expect("count representable in scalar type")
    }
}

impl Real for f32 {}
impl Real for f64 {}
