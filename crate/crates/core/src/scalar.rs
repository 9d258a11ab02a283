//! Scalar abstraction and extended-real arithmetic.
//!
//! Costs live on the extended half-line: every quantity is either finite or
//! exactly `+inf`. NaN and `-inf` are never valid values.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point scalar the solvers are generic over (`f32` or `f64`).
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal into the scalar type.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    /// Lossy conversion for reporting.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Slack allowed on a probability vector summing to one.
///
/// Pinned at `1e-12` for `f64`; widened to a few ulps per entry for scalar
/// types that cannot resolve `1e-12` around one.
pub fn stochastic_tolerance<T: Real>(len: usize) -> T {
    let ulps = T::epsilon() * T::lit(4.0) * T::from_usize(len.max(1)).unwrap_or(T::one());
    ulps.max(T::lit(1e-12))
}

/// True for values admitted on the extended half-line: finite or `+inf`.
#[inline]
pub fn is_extended<T: Real>(x: T) -> bool {
    !x.is_nan() && x != T::neg_infinity()
}

/// `p * v` with the measure-theoretic convention `0 * inf = 0`.
#[inline]
pub fn weighted<T: Real>(p: T, v: T) -> T {
    if p == T::zero() {
        T::zero()
    } else {
        p * v
    }
}

/// Expectation `sum_j probs[j] * values[j]` under the `0 * inf = 0` rule.
#[inline]
pub fn expectation<T: Real>(probs: &[T], values: &[T]) -> T {
    debug_assert_eq!(probs.len(), values.len());
    probs
        .iter()
        .zip(values)
        .fold(T::zero(), |acc, (&p, &v)| acc + weighted(p, v))
}

/// Sup-norm distance over entries; a finiteness mismatch counts as `+inf`,
/// two infinities count as zero.
pub fn sup_distance<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| {
        let d = match (x.is_finite(), y.is_finite()) {
            (true, true) => (x - y).abs(),
            (false, false) => T::zero(),
            _ => T::infinity(),
        };
        acc.max(d)
    })
}
