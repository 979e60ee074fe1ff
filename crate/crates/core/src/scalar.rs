//! Scalar abstraction for the loop-sector kernels.
//!
//! Everything that works on [`LoopStateVector`](crate::LoopStateVector)s is
//! generic over [`Real`], so the same code runs in `f32` for quick scans and
//! `f64` for the reference numbers. The dense oracle and the Lindblad
//! integrator go through LAPACK and are `f64` only.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Sum
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`; every literal in the kernels goes through this.
    #[inline]
    fn of(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 is representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).expect("finite real")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `e^{-i θ}` as a unit complex number.
#[inline]
pub(crate) fn phase<T: Real>(theta: T) -> Complex<T> {
    Complex::new(theta.cos(), -theta.sin())
}

/// Neumaier-compensated sum; keeps normalizations of `2^{Nv-1}`-term
/// vectors at machine precision.
pub fn compensated_sum<T: Real>(values: impl IntoIterator<Item = T>) -> T {
    let (mut sum, mut carry) = (T::zero(), T::zero());
    for x in values {
        let s = sum + x;
        carry = carry
            + if sum.abs() >= x.abs() {
                (sum - s) + x
            } else {
                (x - s) + sum
            };
        sum = s;
    }
    sum + carry
}
