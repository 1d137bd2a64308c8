//! Scalar abstraction shared by every numerical routine in the crate.
//!
//! All norms, transforms and factorizations are written against [`Real`],
//! which is implemented for `f32` and `f64`. Tolerances quoted throughout the
//! documentation assume `f64`; the `f32` instantiation is usable but the
//! default solver tolerances are clamped to its machine epsilon.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rustfft::FftNum;

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + FftNum
    + Default
    + Debug
    + Display
    + LowerExp
    + Sum
    + Send
    + Sync
    + 'static
{
    /// Lossless-enough conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    /// Conversion from a count or index.
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }

    /// Default relative tolerance for iterative solvers: `1e-10`, or a small
    /// multiple of epsilon when the type cannot resolve that.
    fn default_tolerance() -> Self {
        Self::lit(1e-10).max(Self::epsilon() * Self::lit(64.0))
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Pairwise (tree) summation. The split points depend only on the length, so
/// the result is reproducible bit for bit regardless of thread count.
pub fn pairwise_sum<T: Real>(xs: &[T]) -> T {
    const LEAF: usize = 32;
    if xs.len() <= LEAF {
        let mut acc = T::zero();
        for &x in xs {
            acc = acc + x;
        }
        return acc;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// `2^x` for a real exponent.
#[inline]
pub fn exp2<T: Real>(x: T) -> T {
    x.exp2()
}

/// `|a|^p` for a non-negative base, with the convention `0^p = 0` for `p > 0`.
#[inline]
pub fn pow_abs<T: Real>(a: T, p: T) -> T {
    if a == T::zero() {
        T::zero()
    } else {
        a.abs().powf(p)
    }
}

/// Maximum of a slice (`-inf` for an empty slice), ignoring nothing: NaNs
/// are the caller's problem and propagate through `max` as the other operand.
pub fn max_of<T: Real>(xs: &[T]) -> T {
    xs.iter().copied().fold(T::neg_infinity(), T::max)
}

pub fn min_of<T: Real>(xs: &[T]) -> T {
    xs.iter().copied().fold(T::infinity(), T::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_on_small_integers() {
        let xs: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 999.0 * 1000.0 / 2.0);
        assert_eq!(pairwise_sum::<f64>(&[]), 0.0);
    }

    #[test]
    fn default_tolerance_respects_precision() {
        assert_eq!(f64::default_tolerance(), 1e-10);
        assert!(f32::default_tolerance() >= f32::EPSILON * 64.0);
    }

    #[test]
    fn pow_abs_zero_convention() {
        assert_eq!(pow_abs(0.0f64, 2.5), 0.0);
        assert_eq!(pow_abs(-2.0f64, 2.0), 4.0);
    }
}
