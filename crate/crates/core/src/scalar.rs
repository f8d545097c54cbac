//! Scalar abstraction shared by every numerical module.
//!
//! All routines are generic over a real floating-point type `T: Real`
//! (`f32` or `f64`); amplitudes, parameters and matrices are carried as
//! [`Complex<T>`](num_complex::Complex).

use std::fmt::{Debug, Display, LowerExp};

use nalgebra::{ComplexField, RealField};
use num_complex::Complex;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar: f32 or f64.
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive + Debug + Display + LowerExp + Send + Sync + 'static {
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn of(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 literal representable")
    }

    /// Lossy conversion from a count.
    #[inline]
    fn of_usize(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("count representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        <Self as ToPrimitive>::to_f64(&self).unwrap_or(f64::NAN)
    }

    /// Unit roundoff of the type.
    fn machine_epsilon() -> Self;
    fn nan() -> Self;
    fn infinity() -> Self;
    fn neg_infinity() -> Self;
    fn min_positive_value() -> Self;
}

macro_rules! impl_real {
    ($t:ty) => {
        impl Real for $t {
            fn machine_epsilon() -> Self {
                <$t>::EPSILON
            }
            fn nan() -> Self {
                <$t>::NAN
            }
            fn infinity() -> Self {
                <$t>::INFINITY
            }
            fn neg_infinity() -> Self {
                <$t>::NEG_INFINITY
            }
            fn min_positive_value() -> Self {
                <$t>::MIN_POSITIVE
            }
        }
    };
}

impl_real!(f32);
impl_real!(f64);

/// Complex scalar over `T`.
pub type C<T> = Complex<T>;

#[inline]
pub(crate) fn c_is_finite<T: Real>(z: C<T>) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

/// `log(2 cosh z)` without overflow for large `|Re z|`.
pub fn log_two_cosh<T: Real>(z: C<T>) -> C<T> {
    let cutoff = T::of(12.0);
    if z.re.abs() <= cutoff {
        (z.cosh() * T::of(2.0)).ln()
    } else {
        // log(2cosh z) = s z + log(1 + e^{-2 s z}), s = sign(Re z)
        let s = if z.re > T::zero() { z } else { -z };
        let tail = (-(s * T::of(2.0))).exp();
        s + (C::new(T::one(), T::zero()) + tail).ln()
    }
}

/// `tanh z` that saturates to `±1` instead of producing `inf/inf`.
pub fn safe_tanh<T: Real>(z: C<T>) -> C<T> {
    if z.re.abs() <= T::of(20.0) {
        z.tanh()
    } else if z.re > T::zero() {
        C::new(T::one(), T::zero())
    } else {
        C::new(-T::one(), T::zero())
    }
}
