//! Scalar abstractions shared by the numeric routines.
//!
//! Floating-point code (fitting, statistics, weights) is generic over
//! [`Real`]; exact code (rank) is generic over [`ExactInt`].

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Float, FromPrimitive, NumAssign, Signed, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Send + Sync + 'static
{
    fn from_f64_lossy(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 converts to every Real")
    }

    fn from_count(x: u64) -> Self {
        Self::from_u64(x).expect("count converts to every Real")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Integer ring used for fraction-free elimination.
pub trait ExactInt: Integer + Signed + Clone + FromPrimitive + Debug {}

impl ExactInt for i64 {}
impl ExactInt for i128 {}
impl ExactInt for BigInt {}
