//! Floating-point scalar abstraction.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point sample type the toolkit is generic over (`f32` or `f64`).
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Cast a literal constant into the scalar type.
    fn of(value: f64) -> Self {
        Self::from_f64(value).expect("f64 constant must be representable")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Scalar usable with the FFT backend.
pub trait FftScalar: Scalar + rustfft::FftNum {}

impl<T: Scalar + rustfft::FftNum> FftScalar for T {}
