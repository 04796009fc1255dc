use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive};
use rustfft::FftNum;

/// Real scalar the whole crate is generic over.
pub trait Real:
    Float + FloatConst + FromPrimitive + FftNum + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn of(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("representable constant")
    }

    fn of_usize(x: usize) -> Self {
        <Self as FromPrimitive>::from_usize(x).expect("representable count")
    }

    fn of_i64(x: i64) -> Self {
        <Self as FromPrimitive>::from_i64(x).expect("representable integer")
    }

    fn to_f64_lossy(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[cfg(test)]
pub(crate) fn c<T: Real>(re: f64, im: f64) -> Complex<T> {
    Complex::new(T::of(re), T::of(im))
}

pub(crate) fn cr<T: Real>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}

/// `i`
pub(crate) fn imag_unit<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::one())
}

/// Integer power of a complex number, negative exponents included.
pub(crate) fn cpowi<T: Real>(z: Complex<T>, k: i64) -> Complex<T> {
    if k >= 0 {
        z.powu(k as u32)
    } else {
        z.inv().powu((-k) as u32)
    }
}

/// Values that can be linearly combined over the complex numbers: the result
/// type of anything a Lie derivative is taken of.
pub trait Linear<T: Real>: Sized {
    /// `a * self + b * other`
    fn combine(&self, a: Complex<T>, other: &Self, b: Complex<T>) -> Self;
}

impl<T: Real> Linear<T> for Complex<T> {
    fn combine(&self, a: Complex<T>, other: &Self, b: Complex<T>) -> Self {
        a * self + b * other
    }
}

impl<T: Real, V: Linear<T>> Linear<T> for Vec<V> {
    fn combine(&self, a: Complex<T>, other: &Self, b: Complex<T>) -> Self {
        assert_eq!(self.len(), other.len(), "combining vectors of different length");
        self.iter().zip(other).map(|(x, y)| x.combine(a, y, b)).collect()
    }
}
