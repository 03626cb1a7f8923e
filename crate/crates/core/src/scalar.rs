//! Scalar abstraction shared by every numerical module.
//!
//! All physics routines are written against [`Real`] so that the same code
//! runs in `f64` (the default used by the harness) and `f32` (handy for quick
//! low-precision sweeps). Tolerances quoted in the docs assume `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar usable by the simulation kernels.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Default
    + Debug
    + Display
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into this scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    /// Lossy conversion used for diagnostics and file output.
    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex amplitude over a [`Real`] scalar.
pub type Cplx<T> = Complex<T>;

#[inline]
pub(crate) fn lit<T: Real>(x: f64) -> T {
    T::lit(x)
}

#[inline]
/// `limit`, raised to `ulps` machine epsilons where the type cannot resolve
/// it (f32); f64 limits are unaffected.
pub(crate) fn tolerance<T: Real>(limit: f64, ulps: f64) -> T {
    lit::<T>(limit).max(T::epsilon() * lit(ulps))
}

pub(crate) fn cplx<T: Real>(re: T, im: T) -> Cplx<T> {
    Complex::new(re, im)
}

/// `-i * z`
#[inline]
pub(crate) fn mul_neg_i<T: Real>(z: Cplx<T>) -> Cplx<T> {
    Complex::new(z.im, -z.re)
}
