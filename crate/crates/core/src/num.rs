//! Scalar abstraction: all math in this crate is generic over a [`Real`]
//! floating-point type (`f32` or `f64`). Concrete aliases live at the
//! crate root.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive};
use rand::Rng;
use rand_distr::StandardNormal;

/// Floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + Sum<Self> + Debug + Display + Send + Sync + 'static
{
    /// Convert an `f64` constant into this scalar type.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 constant must convert to Real")
    }

    /// Widen to `f64` (exact for `f64`, lossless widening for `f32`).
    fn as_f64(self) -> f64 {
        self.to_f64().expect("Real must convert to f64")
    }

    /// One draw from the standard normal distribution.
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

impl Real for f64 {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample::<f64, _>(StandardNormal)
    }
}

impl Real for f32 {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample::<f32, _>(StandardNormal)
    }
}

/// Linear power from a decibel value; `-inf` dB maps to 0.
pub fn db_to_linear<T: Real>(db: T) -> T {
    if db == T::neg_infinity() {
        T::zero()
    } else {
        T::of(10.0).powf(db / T::of(10.0))
    }
}
