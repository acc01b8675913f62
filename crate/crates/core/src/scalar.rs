//! Scalar abstraction for the numeric core.
//!
//! Everything in this crate is generic over the floating-point type via
//! [`Real`]; concrete `f64` aliases live at the crate root. Random draws are
//! always made in `f64` and converted, so seeded runs produce the same
//! sequence of underlying values regardless of the scalar type.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating-point scalar the library is generic over (`f32` or `f64`).
pub trait Real: RealField + FromPrimitive + ToPrimitive + Copy {}

impl<T> Real for T where T: RealField + FromPrimitive + ToPrimitive + Copy {}

/// Convert an `f64` constant into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("constant not representable in scalar type")
}

/// Convert a `usize` (antenna/beam index or count) into `T`.
#[inline]
pub fn idx<T: Real>(k: usize) -> T {
    T::from_usize(k).expect("index not representable in scalar type")
}
