//! Scalar abstraction.
//!
//! Every numerical module is generic over [`Real`], which is implemented for
//! `f32` and `f64`. The linear algebra comes from `nalgebra`, so the trait is
//! anchored on [`RealField`]; `num-traits` supplies the primitive conversions.
//! Tolerances are requested in `f64` and clamped to the precision of the
//! concrete type through [`tol`].

use std::fmt::{Debug, Display};

use nalgebra::{Complex, RealField};
use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar usable by the simulator: `f32` or `f64`.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Send + Sync + Display + Debug + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("finite literal")
}

#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// A tolerance of `requested`, never tighter than a few hundred ulps of `T`.
#[inline]
pub fn tol<T: Real>(requested: f64) -> T {
    let floor = T::default_epsilon() * lit::<T>(256.0);
    let t = lit::<T>(requested);
    if t > floor {
        t
    } else {
        floor
    }
}

#[inline]
pub fn cplx<T: Real>(re: f64, im: f64) -> Complex<T> {
    Complex::new(lit(re), lit(im))
}

#[inline]
pub fn real<T: Real>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}

/// `exp(i·theta)`.
#[inline]
pub fn cis<T: Real>(theta: T) -> Complex<T> {
    Complex::new(theta.cos(), theta.sin())
}

#[inline]
pub fn cabs<T: Real>(z: Complex<T>) -> T {
    z.norm_sqr().sqrt()
}

#[inline]
pub fn csqrt_real<T: Real>(x: usize) -> T {
    lit::<T>(x as f64).sqrt()
}
