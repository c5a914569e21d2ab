//! Scalar abstraction so the numeric core can run in f32 (training,
//! inference) or f64 (gradient checking) without duplication.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::AddAssign;

/// Floating-point scalar used by tensors, rotation kernels, and the model.
pub trait Real:
    num_traits::Float + Default + Debug + Display + Send + Sync + Sum + AddAssign + 'static
{
    const DTYPE: &'static str;

    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
}

impl Real for f32 {
    const DTYPE: &'static str = "f32";

    #[inline]
    fn from_f64(x: f64) -> Self {
        x as f32
    }

    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    const DTYPE: &'static str = "f64";

    #[inline]
    fn from_f64(x: f64) -> Self {
        x
    }

    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
}

/// Shorthand for lifting an f64 constant into a generic scalar.
#[inline]
pub fn real<T: Real>(x: f64) -> T {
    T::from_f64(x)
}
