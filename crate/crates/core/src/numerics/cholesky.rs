use super::{Matrix, Real};
use crate::error::{Error, Result};

/// Lower-triangular Cholesky factor `A = L·Lᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cholesky<T> {
    l: Matrix<T>,
}

impl<T: Real> Cholesky<T> {
    /// Factors a symmetric matrix, reading only its lower triangle.
    ///
    /// A pivot is rejected when it falls below [`Real::pivot_tolerance`]
    /// times the largest diagonal entry of `a`.
    pub fn factor(a: &Matrix<T>) -> Result<Self> {
        if !a.is_square() || a.nrows() == 0 {
            return Err(Error::InvalidDimension(format!(
                "cholesky needs a non-empty square matrix, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        let n = a.nrows();
        let scale = a
            .diagonal()
            .into_iter()
            .fold(T::zero(), |m, x| m.max(x.abs()));
        let threshold = T::pivot_tolerance() * scale;
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut diag = a[(j, j)];
            for k in 0..j {
                diag = diag - l[(j, k)] * l[(j, k)];
            }
            if !(diag > threshold) || scale == T::zero() {
                return Err(Error::NotPositiveDefinite {
                    index: j,
                    pivot: diag.to_f64_lossy(),
                });
            }
            let ljj = diag.sqrt();
            l[(j, j)] = ljj;
            for i in j + 1..n {
                let mut v = a[(i, j)];
                for k in 0..j {
                    v = v - l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = v / ljj;
            }
        }
        Ok(Self { l })
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    pub fn factor_l(&self) -> &Matrix<T> {
        &self.l
    }

    /// Solves `A·x = b` by forward then backward substitution.
    pub fn solve_vec(&self, b: &[T]) -> Vec<T> {
        let n = self.dim();
        assert_eq!(b.len(), n, "right-hand side length mismatch");
        let l = &self.l;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut v = y[i];
            for k in 0..i {
                v = v - l[(i, k)] * y[k];
            }
            y[i] = v / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut v = y[i];
            for k in i + 1..n {
                v = v - l[(k, i)] * y[k];
            }
            y[i] = v / l[(i, i)];
        }
        y
    }

    /// Solves `A·X = B` column by column.
    pub fn solve(&self, b: &Matrix<T>) -> Matrix<T> {
        let n = self.dim();
        assert_eq!(b.nrows(), n, "right-hand side row mismatch");
        let mut out = Matrix::zeros(n, b.ncols());
        for j in 0..b.ncols() {
            let x = self.solve_vec(&b.col(j));
            for (i, v) in x.into_iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        out
    }

    /// `A⁻¹`, only for callers that need the inverse as a value (posterior covariances).
    pub fn inverse(&self) -> Matrix<T> {
        self.solve(&Matrix::identity(self.dim())).symmetrize()
    }

    /// `log det A`.
    pub fn log_det(&self) -> T {
        self.l
            .diagonal()
            .into_iter()
            .fold(T::zero(), |acc, x| acc + x.ln())
            * T::of(2.0)
    }
}

/// Symmetric positive definite matrix together with its Cholesky factor.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix<T> {
    matrix: Matrix<T>,
    chol: Cholesky<T>,
}

impl<T: Real> SpdMatrix<T> {
    /// Validates symmetry (relative tolerance) and positive definiteness.
    pub fn new(matrix: Matrix<T>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::InvalidDimension(format!(
                "SPD matrix must be non-empty and square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let asym = matrix.asymmetry();
        if asym > T::pivot_tolerance() * matrix.max_abs().max(T::one()) {
            return Err(Error::NotSymmetric(asym.to_f64_lossy()));
        }
        let chol = Cholesky::factor(&matrix)?;
        Ok(Self { matrix, chol })
    }

    /// Symmetrizes before validating; for products that are symmetric only up to rounding.
    pub fn from_nearly_symmetric(matrix: Matrix<T>) -> Result<Self> {
        Self::new(matrix.symmetrize())
    }

    pub fn identity(d: usize) -> Self {
        Self::new(Matrix::identity(d)).expect("identity is SPD")
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.matrix
    }

    pub fn cholesky(&self) -> &Cholesky<T> {
        &self.chol
    }

    pub fn into_matrix(self) -> Matrix<T> {
        self.matrix
    }
}

impl<T> AsRef<Matrix<T>> for SpdMatrix<T> {
    fn as_ref(&self) -> &Matrix<T> {
        &self.matrix
    }
}

/// Solves `A·X = B` for SPD `A` through its Cholesky factor.
pub fn spd_solve<T: Real>(a: &SpdMatrix<T>, b: &Matrix<T>) -> Result<Matrix<T>> {
    if b.nrows() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.nrows(),
        });
    }
    Ok(a.cholesky().solve(b))
}
