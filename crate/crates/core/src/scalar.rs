//! Scalar abstraction shared by the closed-form models.
//!
//! Every formula module is written against [`Scalar`] so the same code runs in
//! `f32` for bulk evaluation and `f64` for fitting and auditing.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point type usable by the model functions: `f32` or `f64`.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Error function.
    fn erf(self) -> Self;

    /// Complementary error function.
    fn erfc(self) -> Self;

    /// Converts an `f64` literal. Every `f64` is representable (possibly rounded)
    /// in both supported types, so this never fails.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }
}

impl Scalar for f64 {
    #[inline]
    fn erf(self) -> Self {
        libm::erf(self)
    }
    #[inline]
    fn erfc(self) -> Self {
        libm::erfc(self)
    }
}

impl Scalar for f32 {
    #[inline]
    fn erf(self) -> Self {
        libm::erff(self)
    }
    #[inline]
    fn erfc(self) -> Self {
        libm::erfcf(self)
    }
}

/// `4 ln 2`, the exponent constant of a Gaussian written in terms of its FWHM.
#[inline]
pub fn four_ln2<T: Scalar>() -> T {
    T::lit(4.0) * T::LN_2()
}

/// FWHM of a Gaussian per unit standard deviation, `2 sqrt(2 ln 2)`.
#[inline]
pub fn fwhm_per_sigma<T: Scalar>() -> T {
    T::lit(2.0) * (T::lit(2.0) * T::LN_2()).sqrt()
}

/// Standard deviation of a Gaussian with the given FWHM.
#[inline]
pub fn sigma_from_fwhm<T: Scalar>(fwhm: T) -> T {
    fwhm / fwhm_per_sigma::<T>()
}
