//! Scalar abstractions.
//!
//! Combinatorial geometry and filtration bookkeeping run over an exact
//! [`Field`] (arbitrary-precision rationals by default). Integration,
//! functionals and the convex solvers run over a floating-point [`Real`].
//! Values cross from the exact side to the float side only through
//! [`to_real`].

use std::fmt::{Debug, Display, LowerExp};
use std::hash::Hash;
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, Num, Signed, ToPrimitive};

/// Exact ordered field used for polytopes, affine forms and filtration values.
pub trait Field:
    Clone
    + Num
    + Signed
    + Ord
    + Hash
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
}

impl<F> Field for F where
    F: Clone
        + Num
        + Signed
        + Ord
        + Hash
        + FromPrimitive
        + ToPrimitive
        + Debug
        + Display
        + Send
        + Sync
        + 'static
{
}

/// Floating-point scalar used by integrators, functionals and solvers.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Default
    + Debug
    + Display
    + LowerExp
    + Sum
    + Send
    + Sync
    + 'static
{
    /// Lossy literal conversion; every `Real` can represent an `f64` approximately.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an exact field element to a float.
#[inline]
pub fn to_real<F: Field, T: Real>(x: &F) -> T {
    T::lit(x.to_f64().unwrap_or(f64::NAN))
}

/// Converts a float to a field element. Exact for binary rationals
/// when `F` is an arbitrary-precision rational.
#[inline]
pub fn from_real<F: Field, T: Real>(x: T) -> Option<F> {
    F::from_f64(x.to_f64()?)
}

#[inline]
pub fn field_from_i64<F: Field>(x: i64) -> F {
    F::from_i64(x).expect("integer representable in field")
}

/// `n!` in the field.
pub fn factorial_field<F: Field>(n: usize) -> F {
    (1..=n).fold(F::one(), |acc, k| acc * field_from_i64::<F>(k as i64))
}

pub fn factorial<T: Real>(n: usize) -> T {
    (1..=n).fold(T::one(), |acc, k| acc * T::from_usize_lossy(k))
}
