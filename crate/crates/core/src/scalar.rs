//! Scalar abstraction for the numerical core.

use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point scalar usable by the predictor, search and simulator.
///
/// `Display` and `FromStr` are required so profiles and logs can be written
/// and read back without loss (Rust's float formatting round-trips).
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Display + Debug + FromStr + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal. Panics only for values not representable
    /// at all, which cannot happen for `f32`/`f64`.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }

    fn from_count(c: usize) -> Self {
        Self::from_usize(c).expect("count representable in scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
