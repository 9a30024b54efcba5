//! Task and dataset sampling.
//!
//! Two task regimes are supported. [`Regime::General`] draws a single shared
//! rotation `V` per distribution and per-task parameters
//! `θ_τ ~ U([θ_lo, θ_hi]^d)`, `λ_τ ~ U([λ_lo, λ_hi]^d)`, `Q_τ = V·diag(λ_τ)·Vᵀ`.
//! [`Regime::LinearCentroid`] uses isotropic features (`Q_τ = I`) and task
//! parameters scattered around a shared centroid with covariance `(R²/d)·I`.
//!
//! Data follow `y = X·θ_τ + ε` with `ε ~ N(0, 1)`; the first `N₁ = round(s·N)`
//! rows of each dataset form the train split.

use crate::error::{Error, Result};
use crate::numerics::{gaussian_matrix, random_orthogonal, standard_gaussian_matrix};
use crate::numerics::{Matrix, Real, Rng, SpdMatrix};

/// Uniform bounds of the general regime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralBounds<T> {
    pub theta_low: T,
    pub theta_high: T,
    pub lambda_low: T,
    pub lambda_high: T,
}

impl<T: Real> Default for GeneralBounds<T> {
    fn default() -> Self {
        Self {
            theta_low: T::zero(),
            theta_high: T::of(2.0),
            lambda_low: T::of(0.1),
            lambda_high: T::of(2.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Regime<T> {
    General {
        bounds: GeneralBounds<T>,
        /// Rotation shared by every task of the distribution.
        basis: Matrix<T>,
    },
    LinearCentroid {
        centroid: Vec<T>,
        /// `R`: task parameters deviate from the centroid with covariance `(R²/d)·I`.
        spread: T,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskDistribution<T> {
    dim: usize,
    regime: Regime<T>,
}

impl<T: Real> TaskDistribution<T> {
    /// General regime with default bounds and a freshly drawn rotation.
    pub fn general(rng: &mut Rng, dim: usize) -> Result<Self> {
        Self::general_with(rng, dim, GeneralBounds::default())
    }

    pub fn general_with(rng: &mut Rng, dim: usize, bounds: GeneralBounds<T>) -> Result<Self> {
        let basis = random_orthogonal(rng, dim)?;
        Self::general_with_basis(bounds, basis)
    }

    pub fn general_with_basis(bounds: GeneralBounds<T>, basis: Matrix<T>) -> Result<Self> {
        let b = &bounds;
        if !(b.lambda_low > T::zero() && b.lambda_low <= b.lambda_high) {
            return Err(Error::InvalidDistribution(format!(
                "eigenvalue bounds need 0 < low <= high, got [{}, {}]",
                b.lambda_low, b.lambda_high
            )));
        }
        if !(b.theta_low <= b.theta_high) || !b.theta_low.is_finite() || !b.theta_high.is_finite() {
            return Err(Error::InvalidDistribution(format!(
                "parameter bounds need low <= high, got [{}, {}]",
                b.theta_low, b.theta_high
            )));
        }
        if !basis.is_square() || basis.nrows() == 0 {
            return Err(Error::InvalidDimension("basis must be a non-empty square matrix".into()));
        }
        Ok(Self {
            dim: basis.nrows(),
            regime: Regime::General { bounds, basis },
        })
    }

    pub fn linear_centroid(centroid: Vec<T>, spread: T) -> Result<Self> {
        if centroid.is_empty() {
            return Err(Error::InvalidDimension("centroid must be non-empty".into()));
        }
        if !(spread >= T::zero()) || !spread.is_finite() {
            return Err(Error::InvalidDistribution(format!(
                "spread must be finite and non-negative, got {spread}"
            )));
        }
        Ok(Self {
            dim: centroid.len(),
            regime: Regime::LinearCentroid { centroid, spread },
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn regime(&self) -> &Regime<T> {
        &self.regime
    }

    pub fn is_linear_centroid(&self) -> bool {
        matches!(self.regime, Regime::LinearCentroid { .. })
    }
}

/// Ground truth of a single task.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskSpec<T> {
    pub theta_gt: Vec<T>,
    pub q: SpdMatrix<T>,
    /// Spectrum of `q` when known from construction.
    pub eigenvalues: Option<Vec<T>>,
    pub noise_sigma: T,
}

impl<T: Real> TaskSpec<T> {
    pub fn new(theta_gt: Vec<T>, q: SpdMatrix<T>) -> Result<Self> {
        if theta_gt.len() != q.dim() {
            return Err(Error::DimensionMismatch {
                expected: q.dim(),
                got: theta_gt.len(),
            });
        }
        Ok(Self {
            theta_gt,
            q,
            eigenvalues: None,
            noise_sigma: T::one(),
        })
    }

    pub fn dim(&self) -> usize {
        self.theta_gt.len()
    }
}

/// One task's data, split into train and validation rows.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskDataset<T> {
    pub x_trn: Matrix<T>,
    pub y_trn: Vec<T>,
    pub x_val: Matrix<T>,
    pub y_val: Vec<T>,
    /// Requested split ratio; the realized one is [`TaskDataset::split_ratio`].
    pub s: T,
}

impl<T: Real> TaskDataset<T> {
    pub fn new(x_trn: Matrix<T>, y_trn: Vec<T>, x_val: Matrix<T>, y_val: Vec<T>) -> Result<Self> {
        if x_trn.nrows() != y_trn.len() {
            return Err(Error::DimensionMismatch {
                expected: x_trn.nrows(),
                got: y_trn.len(),
            });
        }
        if x_val.nrows() != y_val.len() {
            return Err(Error::DimensionMismatch {
                expected: x_val.nrows(),
                got: y_val.len(),
            });
        }
        if x_trn.ncols() != x_val.ncols() {
            return Err(Error::DimensionMismatch {
                expected: x_trn.ncols(),
                got: x_val.ncols(),
            });
        }
        let n = x_trn.nrows() + x_val.nrows();
        if x_trn.nrows() == 0 || x_val.nrows() == 0 {
            return Err(Error::InvalidSplit {
                n,
                s: x_trn.nrows() as f64 / n.max(1) as f64,
                n_trn: x_trn.nrows(),
                n_val: x_val.nrows(),
            });
        }
        let s = T::of_usize(x_trn.nrows()) / T::of_usize(n);
        Ok(Self {
            x_trn,
            y_trn,
            x_val,
            y_val,
            s,
        })
    }

    pub fn dim(&self) -> usize {
        self.x_trn.ncols()
    }

    pub fn n_trn(&self) -> usize {
        self.x_trn.nrows()
    }

    pub fn n_val(&self) -> usize {
        self.x_val.nrows()
    }

    pub fn n(&self) -> usize {
        self.n_trn() + self.n_val()
    }

    /// Realized `N₁/N`.
    pub fn split_ratio(&self) -> T {
        T::of_usize(self.n_trn()) / T::of_usize(self.n())
    }

    /// All rows, train first.
    pub fn x_all(&self) -> Matrix<T> {
        let d = self.dim();
        let mut data = Vec::with_capacity(self.n() * d);
        data.extend_from_slice(self.x_trn.as_slice());
        data.extend_from_slice(self.x_val.as_slice());
        Matrix::from_vec(self.n(), d, data).expect("consistent shapes")
    }

    pub fn y_all(&self) -> Vec<T> {
        let mut y = self.y_trn.clone();
        y.extend_from_slice(&self.y_val);
        y
    }
}

/// Label noise model used when sampling datasets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Noise {
    /// `ε ~ N(0, σ²)` with the task's `σ`.
    #[default]
    Gaussian,
    /// `ε ≡ 0`.
    None,
}

/// `(N₁, N₂)` with `N₁ = round(s·N)`, halves rounded away from zero.
pub fn split_sizes(n: usize, s: f64) -> Result<(usize, usize)> {
    let n_trn = if s.is_finite() && s > 0.0 {
        (s * n as f64).round().min(n as f64) as usize
    } else {
        0
    };
    let n_val = n - n_trn;
    if !(s > 0.0 && s < 1.0) || n_trn == 0 || n_val == 0 {
        return Err(Error::InvalidSplit { n, s, n_trn, n_val });
    }
    Ok((n_trn, n_val))
}

pub fn sample_task<T: Real>(rng: &mut Rng, dist: &TaskDistribution<T>) -> Result<TaskSpec<T>> {
    let d = dist.dim;
    match &dist.regime {
        Regime::General { bounds, basis } => {
            let theta: Vec<T> = (0..d)
                .map(|_| {
                    T::of(rng.uniform(
                        bounds.theta_low.to_f64_lossy(),
                        bounds.theta_high.to_f64_lossy(),
                    ))
                })
                .collect();
            let lambda: Vec<T> = (0..d)
                .map(|_| {
                    T::of(rng.uniform(
                        bounds.lambda_low.to_f64_lossy(),
                        bounds.lambda_high.to_f64_lossy(),
                    ))
                })
                .collect();
            let q = basis
                .matmul(&Matrix::from_diagonal(&lambda))
                .matmul(&basis.transpose());
            Ok(TaskSpec {
                theta_gt: theta,
                q: SpdMatrix::from_nearly_symmetric(q)?,
                eigenvalues: Some(lambda),
                noise_sigma: T::one(),
            })
        }
        Regime::LinearCentroid { centroid, spread } => {
            let sd = spread.to_f64_lossy() / (d as f64).sqrt();
            let theta = centroid
                .iter()
                .map(|&c| c + T::of(sd * rng.standard_normal()))
                .collect();
            Ok(TaskSpec {
                theta_gt: theta,
                q: SpdMatrix::identity(d),
                eigenvalues: Some(vec![T::one(); d]),
                noise_sigma: T::one(),
            })
        }
    }
}

pub fn sample_dataset<T: Real>(
    rng: &mut Rng,
    task: &TaskSpec<T>,
    n: usize,
    s: f64,
) -> Result<TaskDataset<T>> {
    sample_dataset_with(rng, task, n, s, Noise::Gaussian)
}

pub fn sample_dataset_with<T: Real>(
    rng: &mut Rng,
    task: &TaskSpec<T>,
    n: usize,
    s: f64,
    noise: Noise,
) -> Result<TaskDataset<T>> {
    let (n_trn, n_val) = split_sizes(n, s)?;
    let (x, y) = sample_labelled(rng, task, n, noise)?;
    let d = task.dim();
    let (trn, val) = x.as_slice().split_at(n_trn * d);
    let x_trn = Matrix::from_vec(n_trn, d, trn.to_vec())?;
    let x_val = Matrix::from_vec(n_val, d, val.to_vec())?;
    let (y_trn, y_val) = y.split_at(n_trn);
    Ok(TaskDataset {
        x_trn,
        y_trn: y_trn.to_vec(),
        x_val,
        y_val: y_val.to_vec(),
        s: T::of(s),
    })
}

/// `n` labelled rows drawn from the task, without a split.
pub fn sample_labelled<T: Real>(
    rng: &mut Rng,
    task: &TaskSpec<T>,
    n: usize,
    noise: Noise,
) -> Result<(Matrix<T>, Vec<T>)> {
    let d = task.dim();
    let x = if is_identity(task.q.matrix()) {
        if n == 0 {
            return Err(Error::InvalidDimension("sample count must be positive".into()));
        }
        standard_gaussian_matrix(rng, n, d)
    } else {
        gaussian_matrix(rng, n, d, &task.q)?
    };
    let mut y = x.mat_vec(&task.theta_gt);
    if noise == Noise::Gaussian {
        let sigma = task.noise_sigma.to_f64_lossy();
        for v in &mut y {
            *v = *v + T::of(sigma * rng.standard_normal());
        }
    }
    Ok((x, y))
}

fn is_identity<T: Real>(m: &Matrix<T>) -> bool {
    (0..m.nrows()).all(|i| (0..m.ncols()).all(|j| m[(i, j)] == if i == j { T::one() } else { T::zero() }))
}

/// `(1/n)·XᵀX`; singular when `n < d`.
pub fn empirical_q<T: Real>(x: &Matrix<T>) -> Result<Matrix<T>> {
    if x.nrows() == 0 {
        return Err(Error::Empty("design matrix has no rows"));
    }
    Ok(x.gram().scale(T::one() / T::of_usize(x.nrows())))
}
