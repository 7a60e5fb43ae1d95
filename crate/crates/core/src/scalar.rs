//! Scalar abstraction so the spectral core runs in either f32 or f64.

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating-point scalar the solver is generic over.
///
/// Everything downstream (fields, operators, stepping, diagnostics) is written
/// against this trait; `f64` is the precision the CLI and the stated
/// tolerances target, `f32` works for smoke-level accuracy.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + rustfft::FftNum
    + std::iter::Sum
    + std::fmt::Display
    + std::fmt::LowerExp
    + Serialize
    + DeserializeOwned
{
    /// Convert an `f64` literal (tolerances, coefficients) into `Self`.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal must convert into scalar type")
    }

    fn two_pi() -> Self {
        Self::PI() + Self::PI()
    }

    fn half() -> Self {
        Self::lit(0.5)
    }

    fn two() -> Self {
        Self::lit(2.0)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
