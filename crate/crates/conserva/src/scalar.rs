//! Floating-point scalar abstraction for the whole workbench.
//!
//! Everything numerical is generic over [`Real`] so the same solvers run in
//! `f32` or `f64`. The experiment drivers and the CLI use the `f64` aliases
//! exported from the crate root.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

/// Scalar type the solvers operate on: `f32` or `f64`.
pub trait Real:
    num_traits::Float
    + num_traits::FloatConst
    + num_traits::FromPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Convert an `f64` literal. Panics on values not representable as a
    /// finite scalar, which never happens for the constants used here.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("literal not representable in scalar type")
    }

    /// Convert an index or count.
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("count not representable in scalar type")
    }

    fn two() -> Self {
        Self::of(2.0)
    }

    fn half() -> Self {
        Self::of(0.5)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Euclidean 2-norm of a slice.
pub fn norm2<R: Real>(v: &[R]) -> R {
    v.iter().map(|&x| x * x).sum::<R>().sqrt()
}

/// Volume-weighted discrete L2 norm `sqrt(Σ vol·v_i²)` for a uniform volume.
pub fn weighted_norm2<R: Real>(volume: R, v: &[R]) -> R {
    (volume * v.iter().map(|&x| x * x).sum::<R>()).sqrt()
}

/// Dot product.
pub fn dot<R: Real>(a: &[R], b: &[R]) -> R {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// `y += s * x`.
pub fn axpy<R: Real>(y: &mut [R], s: R, x: &[R]) {
    debug_assert_eq!(y.len(), x.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += s * xi;
    }
}

/// Maximum absolute entry.
pub fn max_abs<R: Real>(v: &[R]) -> R {
    v.iter().fold(R::zero(), |m, &x| m.max(x.abs()))
}
