//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real floating point type the numerics are generic over (`f32`, `f64`).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Conversion from a count.
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Real for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + ToPrimitive
        + NumAssign
        + Sum
        + Debug
        + Display
        + Default
        + Send
        + Sync
        + 'static
{
}

/// Complex number over a [`Real`].
pub type C<T> = Complex<T>;

pub(crate) fn czero<T: Real>() -> C<T> {
    C::new(T::zero(), T::zero())
}

pub(crate) fn cone<T: Real>() -> C<T> {
    C::new(T::one(), T::zero())
}

pub(crate) fn creal<T: Real>(x: T) -> C<T> {
    C::new(x, T::zero())
}

/// Integer power of a complex number, negative exponents allowed.
pub fn cpowi<T: Real>(z: C<T>, k: i64) -> C<T> {
    let mut base = if k < 0 { cone::<T>() / z } else { z };
    let mut e = k.unsigned_abs();
    let mut acc = cone::<T>();
    while e > 0 {
        if e & 1 == 1 {
            acc *= base;
        }
        base = base * base;
        e >>= 1;
    }
    acc
}

/// Max-modulus of a complex vector.
pub fn inf_norm<T: Real>(v: &[C<T>]) -> T {
    v.iter().map(|x| x.norm()).fold(T::zero(), T::max)
}
