//! Scalar abstractions shared by the exact and floating-point code paths.
//!
//! The combinatorial kernels (immanants, permanents, the figure of merit) only
//! need ring/field operations, so they are written against [`Ring`] and work
//! unchanged for `i64`, `Ratio<i64>`, `f32`/`f64` and their complex versions.

use num_traits::{FromPrimitive, Num};

/// Commutative ring with an embedding of the integers.
pub trait Ring: Num + FromPrimitive + Clone + PartialEq + Send + Sync + std::fmt::Debug + 'static {
    /// Embeds an integer coefficient (a character value, a dimension).
    fn from_int(v: i64) -> Self {
        Self::from_i64(v).expect("integer not representable in scalar type")
    }
}

impl<T> Ring for T where T: Num + FromPrimitive + Clone + PartialEq + Send + Sync + std::fmt::Debug + 'static {}

/// Real floating-point scalar (`f32` or `f64`).
pub trait Real: num_traits::Float + FromPrimitive + Ring + Default {}

impl Real for f32 {}
impl Real for f64 {}
