use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_traits::Float;
use serde::Serialize;

/// Floating-point type used for numeric cells, domains and information loss.
///
/// Implemented for `f32` and `f64`.
pub trait Scalar:
    Float + FromStr + Display + Debug + Default + Serialize + Send + Sync + 'static
{
    /// Lossy conversion from a JSON/config number.
    fn from_f64(v: f64) -> Self;

    fn to_f64(self) -> f64;

    /// `num / den` in this precision; `den` must be nonzero.
    fn ratio(num: usize, den: usize) -> Self {
        Self::from_f64(num as f64) / Self::from_f64(den as f64)
    }
}

impl Scalar for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }

    fn to_f64(self) -> f64 {
        self
    }
}

impl Scalar for f32 {
    fn from_f64(v: f64) -> Self {
        v as f32
    }

    fn to_f64(self) -> f64 {
        self as f64
    }
}
