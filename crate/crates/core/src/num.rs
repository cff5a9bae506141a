//! Scalar abstraction shared by every numerical module.
//!
//! The library is written once against [`Real`] and instantiated for `f64`
//! (the default used by the CLI and the acceptance suite) and `f32`.

use std::fmt::{Debug, Display};

use nalgebra::{ComplexField, RealField};
use num_complex::Complex;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real floating point scalar usable throughout the crate.
pub trait Real:
    RealField + FromPrimitive + ToPrimitive + Copy + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` literal into this scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn eps() -> Self {
        Self::default_epsilon()
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex number over a [`Real`] scalar.
pub type Cplx<T> = Complex<T>;

#[inline]
pub(crate) fn cplx<T: Real>(re: T, im: T) -> Cplx<T> {
    Complex::new(re, im)
}

#[inline]
pub(crate) fn real<T: Real>(re: T) -> Cplx<T> {
    Complex::new(re, T::zero())
}

#[inline]
pub(crate) fn j<T: Real>() -> Cplx<T> {
    Complex::new(T::zero(), T::one())
}

/// Principal square root, `Re >= 0`, with `Im` taking the sign of the input's
/// imaginary part (so `-x + 0j` maps to `+j sqrt(x)`).
pub fn principal_sqrt<T: Real>(z: Cplx<T>) -> Cplx<T> {
    let (x, y) = (z.re, z.im);
    if x == T::zero() && y == T::zero() {
        return Cplx::new(T::zero(), T::zero());
    }
    let m = x.hypot(y);
    let two = T::lit(2.0);
    if x >= T::zero() {
        let t = ((m + x) / two).sqrt();
        cplx(t, y / (two * t))
    } else {
        let t = ((m - x) / two).sqrt();
        let re = y.abs() / (two * t);
        let im = if y < T::zero() { -t } else { t };
        cplx(re, im)
    }
}

/// Square root of a real radicand on the radiation branch: real and positive
/// for `x >= 0`, `+j sqrt(-x)` otherwise.
#[inline]
pub fn radiating_sqrt<T: Real>(x: T) -> Cplx<T> {
    if x >= T::zero() {
        real(x.sqrt())
    } else {
        cplx(T::zero(), (-x).sqrt())
    }
}

#[inline]
pub(crate) fn cexp<T: Real>(z: Cplx<T>) -> Cplx<T> {
    ComplexField::exp(z)
}

#[inline]
pub(crate) fn cabs<T: Real>(z: Cplx<T>) -> T {
    z.re.hypot(z.im)
}

#[inline]
pub(crate) fn cabs2<T: Real>(z: Cplx<T>) -> T {
    z.re * z.re + z.im * z.im
}

/// Complex hyperbolic tangent that stays finite for large `|Re z|`.
pub fn ctanh<T: Real>(z: Cplx<T>) -> Cplx<T> {
    // tanh(x+iy) = (sinh 2x + i sin 2y) / (cosh 2x + cos 2y)
    let two = T::lit(2.0);
    let x2 = two * z.re;
    let y2 = two * z.im;
    if x2.abs() > T::lit(40.0) {
        // cosh dominates; tanh -> sign(x) with exponentially small correction
        let s = if x2 > T::zero() { T::one() } else { -T::one() };
        let e = (-x2.abs()).exp();
        return cplx(s, two * y2.sin() * e);
    }
    let den = x2.cosh() + y2.cos();
    cplx(x2.sinh() / den, y2.sin() / den)
}

/// `cos(z)/sin(z)`, evaluated through `exp(∓2jz)` so that large `|Im z|`
/// saturates to `±j` instead of overflowing.
///
/// Returns `None` within `tol` of a pole (`|1 - exp(∓2jz)| < tol`).
pub fn ccot<T: Real>(z: Cplx<T>, tol: T) -> Option<Cplx<T>> {
    let two = T::lit(2.0);
    // cot z = j (1 + w) / (1 - w) with w = exp(-2jz) when Im z <= 0,
    // and cot z = -j (1 + w) / (1 - w) with w = exp(2jz) otherwise.
    let (w, sign) = if z.im <= T::zero() {
        (cexp(cplx(two * z.im, -two * z.re)), T::one())
    } else {
        (cexp(cplx(-two * z.im, two * z.re)), -T::one())
    };
    let den = real(T::one()) - w;
    if !(cabs(den) > tol) {
        return None;
    }
    Some(cplx(T::zero(), sign) * (real(T::one()) + w) / den)
}

#[inline]
pub(crate) fn is_finite_c<T: Real>(z: Cplx<T>) -> bool {
    z.re.is_finite() && z.im.is_finite()
}
