//! Deterministic dense linear algebra and random sampling kernels.
//!
//! Everything here is small-matrix code: the dimensions in this crate stay in
//! the low hundreds, so row-major storage with straightforward loops is enough.

mod cholesky;
mod matrix;
mod rng;
mod sampling;
mod sum;

pub use cholesky::{spd_solve, Cholesky, SpdMatrix};
pub use matrix::{determinant, Matrix};
pub use rng::Rng;
pub use sampling::{gaussian_matrix, random_orthogonal, standard_gaussian_matrix};
pub use sum::NeumaierSum;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use std::fmt::{Debug, Display};

/// Scalar type of the numerical core.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from `f64`, used for literals and sampled values.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Relative pivot threshold below which a Cholesky factorization is rejected.
    fn pivot_tolerance() -> Self {
        Self::of(1e-12).max(Self::epsilon() * Self::of(100.0))
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Euclidean inner product.
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// `a - b`, elementwise.
pub fn sub<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

/// `a + b`, elementwise.
pub fn add<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x + y).collect()
}

/// `k·a`.
pub fn scale<T: Real>(a: &[T], k: T) -> Vec<T> {
    a.iter().map(|&x| x * k).collect()
}

/// Largest absolute entry; zero for an empty slice.
pub fn max_abs<T: Real>(a: &[T]) -> T {
    a.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
}
