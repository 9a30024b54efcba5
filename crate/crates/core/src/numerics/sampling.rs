use super::{determinant, Matrix, Real, Rng, SpdMatrix};
use crate::error::{Error, Result};

/// `n×d` matrix of i.i.d. standard normal entries.
pub fn standard_gaussian_matrix<T: Real>(rng: &mut Rng, n: usize, d: usize) -> Matrix<T> {
    Matrix::from_fn(n, d, |_, _| T::of(rng.standard_normal()))
}

/// `n×d` matrix whose rows are i.i.d. `N(0, cov)`, generated as `Z·Lᵀ`.
pub fn gaussian_matrix<T: Real>(
    rng: &mut Rng,
    n: usize,
    d: usize,
    cov: &SpdMatrix<T>,
) -> Result<Matrix<T>> {
    if n == 0 {
        return Err(Error::InvalidDimension("sample count must be positive".into()));
    }
    if cov.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: cov.dim(),
        });
    }
    let z = standard_gaussian_matrix(rng, n, d);
    Ok(z.matmul(&cov.cholesky().factor_l().transpose()))
}

/// Haar-distributed rotation in `SO(d)`.
///
/// Householder QR of a Gaussian matrix, with columns rescaled so that `R` has
/// a positive diagonal (Haar on `O(d)`), then the first column flipped when
/// the determinant is negative.
pub fn random_orthogonal<T: Real>(rng: &mut Rng, d: usize) -> Result<Matrix<T>> {
    if d == 0 {
        return Err(Error::InvalidDimension("rotation dimension must be positive".into()));
    }
    let mut a: Matrix<T> = standard_gaussian_matrix(rng, d, d);
    let mut q = Matrix::<T>::identity(d);
    let mut r_signs = vec![T::one(); d];
    for k in 0..d {
        let norm = (k..d).fold(T::zero(), |s, i| s + a[(i, k)] * a[(i, k)]).sqrt();
        if norm == T::zero() {
            continue;
        }
        let alpha = if a[(k, k)] > T::zero() { -norm } else { norm };
        let mut v: Vec<T> = (k..d).map(|i| a[(i, k)]).collect();
        v[0] = v[0] - alpha;
        let vnorm2 = v.iter().fold(T::zero(), |s, &x| s + x * x);
        if vnorm2 == T::zero() {
            r_signs[k] = alpha.signum();
            continue;
        }
        let two = T::of(2.0);
        // A ← H·A
        for j in k..d {
            let proj = (k..d).fold(T::zero(), |s, i| s + v[i - k] * a[(i, j)]) * two / vnorm2;
            for i in k..d {
                a[(i, j)] = a[(i, j)] - proj * v[i - k];
            }
        }
        // Q ← Q·H
        for i in 0..d {
            let proj = (k..d).fold(T::zero(), |s, j| s + q[(i, j)] * v[j - k]) * two / vnorm2;
            for j in k..d {
                q[(i, j)] = q[(i, j)] - proj * v[j - k];
            }
        }
        r_signs[k] = a[(k, k)].signum();
    }
    for (j, &sign) in r_signs.iter().enumerate() {
        if sign < T::zero() {
            for i in 0..d {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    if determinant(&q) < T::zero() {
        for i in 0..d {
            q[(i, 0)] = -q[(i, 0)];
        }
    }
    Ok(q)
}
