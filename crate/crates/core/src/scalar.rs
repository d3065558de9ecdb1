//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point type the library computes in: `f32` or `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion of an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// `ln(m!)`, exact summation for small `m` and a Stirling series beyond.
pub fn ln_factorial<T: Scalar>(m: u64) -> T {
    if m < 2 {
        return T::zero();
    }
    if m <= 256 {
        let mut acc = 0.0f64;
        for i in 2..=m {
            acc += (i as f64).ln();
        }
        return T::lit(acc);
    }
    let x = (m + 1) as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)));
    T::lit((x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln() + series)
}

/// `m!` as a floating value (overflows to infinity for large `m`).
pub fn factorial<T: Scalar>(m: u64) -> T {
    if m <= 170 {
        let mut acc = 1.0f64;
        for i in 2..=m {
            acc *= i as f64;
        }
        T::lit(acc)
    } else {
        T::infinity()
    }
}
