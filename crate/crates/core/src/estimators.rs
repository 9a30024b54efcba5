//! Closed-form adaptation rules, weight matrices and meta-level solvers.
//!
//! For each learner `A` the meta-test risk is the quadratic form
//! `E_τ‖θ₀ − θ_τ‖²_{W_τ} + 1` in the initialization, and the empirical meta
//! loss is a least-squares problem whose Hessian is `Σ_τ Ŵ_τ`:
//!
//! | learner | population `W_τ`                         | empirical `Ŵ_τ`                                 |
//! |---------|------------------------------------------|-------------------------------------------------|
//! | ERM     | `Q`                                      | `Q̂_N`                                           |
//! | MAML    | `(I−αQ)Q(I−αQ)`                          | `(I−αQ̂₁)Q̂₂(I−αQ̂₁)`                              |
//! | iMAML   | `(Q/γ+I)⁻¹Q(Q/γ+I)⁻¹`                    | `(Q̂₁/γ+I)⁻¹Q̂₂(Q̂₁/γ+I)⁻¹`                        |
//! | BaMAML  | `(Q/(sγ)+I)⁻¹Q(Q/γ+I)⁻¹`                 | `(Q̂_N/(sγ)+I)⁻¹Q̂₂(Q̂₁/γ+I)⁻¹`                    |
//!
//! where `Q̂₁`, `Q̂₂`, `Q̂_N` are the train, validation and pooled feature
//! covariances. All solves go through Cholesky factors of `I + c·Q`, which
//! are positive definite for any PSD `Q`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{self, Cholesky, Matrix, Real, SpdMatrix};
use crate::taskgen::{TaskDataset, TaskSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodKind {
    Erm,
    Maml,
    Imaml,
    Bamaml,
}

impl MethodKind {
    pub const ALL: [MethodKind; 4] = [
        MethodKind::Erm,
        MethodKind::Maml,
        MethodKind::Imaml,
        MethodKind::Bamaml,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MethodKind::Erm => "erm",
            MethodKind::Maml => "maml",
            MethodKind::Imaml => "imaml",
            MethodKind::Bamaml => "bamaml",
        }
    }

    /// Ridge-type learners whose normal equations are nonsingular for any data.
    pub fn is_regularized(self) -> bool {
        matches!(self, MethodKind::Imaml | MethodKind::Bamaml)
    }
}

impl fmt::Display for MethodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MethodKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "erm" => Ok(MethodKind::Erm),
            "maml" => Ok(MethodKind::Maml),
            "imaml" => Ok(MethodKind::Imaml),
            "bamaml" => Ok(MethodKind::Bamaml),
            other => Err(Error::InvalidHyperparameter(format!("unknown method '{other}'"))),
        }
    }
}

/// A learner together with its hyperparameter.
///
/// `alpha` is twice the MAML step size: the adapted parameter is
/// `θ₀ − (α/2)·∇ℓ(θ₀)`. BaMAML's prior precision is `γ_b = γ·N₁`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method<T> {
    Erm,
    Maml { alpha: T },
    Imaml { gamma: T },
    Bamaml { gamma: T },
}

impl<T: Real> Method<T> {
    pub fn erm() -> Self {
        Method::Erm
    }

    /// `alpha = 0` is accepted and collapses MAML onto ERM on the validation split.
    pub fn maml(alpha: T) -> Result<Self> {
        if !(alpha >= T::zero()) || !alpha.is_finite() {
            return Err(Error::InvalidHyperparameter(format!(
                "MAML alpha must be finite and >= 0, got {alpha}"
            )));
        }
        Ok(Method::Maml { alpha })
    }

    pub fn imaml(gamma: T) -> Result<Self> {
        check_gamma(gamma)?;
        Ok(Method::Imaml { gamma })
    }

    pub fn bamaml(gamma: T) -> Result<Self> {
        check_gamma(gamma)?;
        Ok(Method::Bamaml { gamma })
    }

    /// Builds a method from its kind and a hyperparameter (ignored for ERM).
    pub fn with_hyperparameter(kind: MethodKind, value: T) -> Result<Self> {
        match kind {
            MethodKind::Erm => Ok(Method::Erm),
            MethodKind::Maml => Self::maml(value),
            MethodKind::Imaml => Self::imaml(value),
            MethodKind::Bamaml => Self::bamaml(value),
        }
    }

    pub fn kind(&self) -> MethodKind {
        match self {
            Method::Erm => MethodKind::Erm,
            Method::Maml { .. } => MethodKind::Maml,
            Method::Imaml { .. } => MethodKind::Imaml,
            Method::Bamaml { .. } => MethodKind::Bamaml,
        }
    }

    /// `(name, value)` of the hyperparameter, if any.
    pub fn hyperparameter(&self) -> Option<(&'static str, T)> {
        match *self {
            Method::Erm => None,
            Method::Maml { alpha } => Some(("alpha", alpha)),
            Method::Imaml { gamma } | Method::Bamaml { gamma } => Some(("gamma", gamma)),
        }
    }
}

impl<T: Real> fmt::Display for Method<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.hyperparameter() {
            None => write!(f, "{}", self.kind()),
            Some((name, v)) => write!(f, "{}({name}={v})", self.kind()),
        }
    }
}

fn check_gamma<T: Real>(gamma: T) -> Result<()> {
    if !(gamma > T::zero()) || !gamma.is_finite() {
        return Err(Error::InvalidHyperparameter(format!(
            "gamma must be finite and > 0, got {gamma}"
        )));
    }
    Ok(())
}

/// Sufficient statistics of a task dataset: Gram matrices and `Xᵀy` per split.
///
/// Every estimator in this module depends on the data only through these.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskStats<T> {
    pub n_trn: usize,
    pub n_val: usize,
    pub gram_trn: Matrix<T>,
    pub gram_val: Matrix<T>,
    pub xty_trn: Vec<T>,
    pub xty_val: Vec<T>,
}

impl<T: Real> TaskStats<T> {
    pub fn from_dataset(ds: &TaskDataset<T>) -> Self {
        Self {
            n_trn: ds.n_trn(),
            n_val: ds.n_val(),
            gram_trn: ds.x_trn.gram(),
            gram_val: ds.x_val.gram(),
            xty_trn: ds.x_trn.tr_mat_vec(&ds.y_trn),
            xty_val: ds.x_val.tr_mat_vec(&ds.y_val),
        }
    }

    /// Statistics of an unlabelled split; weight matrices do not depend on labels.
    pub fn from_features(x_trn: &Matrix<T>, x_val: &Matrix<T>) -> Self {
        let d = x_trn.ncols();
        Self {
            n_trn: x_trn.nrows(),
            n_val: x_val.nrows(),
            gram_trn: x_trn.gram(),
            gram_val: x_val.gram(),
            xty_trn: vec![T::zero(); d],
            xty_val: vec![T::zero(); d],
        }
    }

    pub fn dim(&self) -> usize {
        self.gram_trn.nrows()
    }

    pub fn n(&self) -> usize {
        self.n_trn + self.n_val
    }

    pub fn split_ratio(&self) -> T {
        T::of_usize(self.n_trn) / T::of_usize(self.n())
    }

    pub fn q_trn(&self) -> Matrix<T> {
        self.gram_trn.scale(T::one() / T::of_usize(self.n_trn))
    }

    pub fn q_val(&self) -> Matrix<T> {
        self.gram_val.scale(T::one() / T::of_usize(self.n_val))
    }

    pub fn q_all(&self) -> Matrix<T> {
        self.gram_trn
            .add(&self.gram_val)
            .scale(T::one() / T::of_usize(self.n()))
    }

    pub fn xty_all(&self) -> Vec<T> {
        numerics::add(&self.xty_trn, &self.xty_val)
    }
}

impl<T: Real> From<&TaskDataset<T>> for TaskStats<T> {
    fn from(ds: &TaskDataset<T>) -> Self {
        Self::from_dataset(ds)
    }
}

/// Cholesky factor of `I + c·q` for PSD `q` and `c ≥ 0`.
fn resolvent<T: Real>(q: &Matrix<T>, c: T) -> Cholesky<T> {
    Cholesky::factor(&q.scale(c).add_diagonal(T::one()))
        .expect("I + c·Q is positive definite for PSD Q")
}

/// `A⁻¹·M·B⁻¹` for symmetric `M` given factors of SPD `A`, `B`, symmetrized.
fn sandwich<T: Real>(left: &Cholesky<T>, middle: &Matrix<T>, right: &Cholesky<T>) -> Matrix<T> {
    // (B⁻¹M)ᵀ = M·B⁻¹
    let m_binv = right.solve(middle).transpose();
    left.solve(&m_binv).symmetrize()
}

/// `(I − αq)·m·(I − αq)`.
fn gradient_sandwich<T: Real>(q: &Matrix<T>, m: &Matrix<T>, alpha: T) -> Matrix<T> {
    let a = Matrix::identity(q.nrows()).sub(&q.scale(alpha));
    a.matmul(m).matmul(&a).symmetrize()
}

/// Population weight `W_τ` for a task with feature covariance `q` and split ratio `s`.
pub fn population_weight<T: Real>(method: &Method<T>, q: &SpdMatrix<T>, s: T) -> Matrix<T> {
    let q = q.matrix();
    match *method {
        Method::Erm => q.clone(),
        Method::Maml { alpha } => gradient_sandwich(q, q, alpha),
        Method::Imaml { gamma } => {
            let r = resolvent(q, gamma.recip());
            sandwich(&r, q, &r)
        }
        Method::Bamaml { gamma } => {
            let outer = resolvent(q, (gamma * s).recip());
            let inner = resolvent(q, gamma.recip());
            sandwich(&outer, q, &inner)
        }
    }
}

/// Empirical weight `Ŵ_τ` of one dataset.
pub fn empirical_weight<T: Real>(method: &Method<T>, ds: &TaskDataset<T>) -> Matrix<T> {
    stats_weight(method, &TaskStats::from_dataset(ds))
}

/// Empirical weight `Ŵ_τ` from sufficient statistics.
pub fn stats_weight<T: Real>(method: &Method<T>, st: &TaskStats<T>) -> Matrix<T> {
    match *method {
        Method::Erm => st.q_all(),
        Method::Maml { alpha } => gradient_sandwich(&st.q_trn(), &st.q_val(), alpha),
        Method::Imaml { gamma } => {
            let r = resolvent(&st.q_trn(), gamma.recip());
            sandwich(&r, &st.q_val(), &r)
        }
        Method::Bamaml { gamma } => {
            let (q_all, q_trn) = (st.q_all(), st.q_trn());
            let outer = resolvent(&q_all, (gamma * st.split_ratio()).recip());
            let inner = resolvent(&q_trn, gamma.recip());
            sandwich(&outer, &bamaml_validation_q(st, &q_all, &q_trn), &inner)
        }
    }
}

/// `Q̂₂ = (N·Q̂_N − N₁·Q̂₁)/N₂`, the validation covariance implied by the pooled one.
fn bamaml_validation_q<T: Real>(st: &TaskStats<T>, q_all: &Matrix<T>, q_trn: &Matrix<T>) -> Matrix<T> {
    q_all
        .scale(T::of_usize(st.n()))
        .sub(&q_trn.scale(T::of_usize(st.n_trn)))
        .scale(T::one() / T::of_usize(st.n_val))
}

/// Per-task normal-equation terms `(Ŵ_τ, b_τ)`; the fitted initialization solves
/// `(Σ Ŵ_τ)·θ₀ = Σ b_τ`.
pub fn normal_equation<T: Real>(method: &Method<T>, st: &TaskStats<T>) -> (Matrix<T>, Vec<T>) {
    let weight = stats_weight(method, st);
    let n1 = T::of_usize(st.n_trn);
    let n2 = T::of_usize(st.n_val);
    let rhs = match *method {
        Method::Erm => numerics::scale(&st.xty_all(), T::one() / T::of_usize(st.n())),
        Method::Maml { alpha } => {
            let q_trn = st.q_trn();
            let shifted = numerics::sub(
                &numerics::scale(&st.xty_val, n2.recip()),
                &numerics::scale(&st.q_val().mat_vec(&st.xty_trn), alpha / n1),
            );
            numerics::sub(&shifted, &numerics::scale(&q_trn.mat_vec(&shifted), alpha))
        }
        Method::Imaml { gamma } => {
            let r = resolvent(&st.q_trn(), gamma.recip());
            let inner = r.solve_vec(&st.xty_trn);
            let v = numerics::sub(
                &numerics::scale(&st.xty_val, n2.recip()),
                &numerics::scale(&st.q_val().mat_vec(&inner), (gamma * n1).recip()),
            );
            r.solve_vec(&v)
        }
        Method::Bamaml { gamma } => {
            let outer = resolvent(&st.q_all(), (gamma * st.split_ratio()).recip());
            let inner = resolvent(&st.q_trn(), gamma.recip());
            numerics::scale(
                &numerics::sub(&outer.solve_vec(&st.xty_all()), &inner.solve_vec(&st.xty_trn)),
                n2.recip(),
            )
        }
    };
    (weight, rhs)
}

/// Task-specific parameter after adapting `theta0` on `(x, y)`.
pub fn adapt<T: Real>(method: &Method<T>, theta0: &[T], x: &Matrix<T>, y: &[T]) -> Result<Vec<T>> {
    check_adaptation_data(theta0, x, y)?;
    let n = T::of_usize(x.nrows());
    match *method {
        Method::Erm => Ok(theta0.to_vec()),
        Method::Maml { alpha } => {
            let q = x.gram().scale(n.recip());
            let step = numerics::sub(&q.mat_vec(theta0), &numerics::scale(&x.tr_mat_vec(y), n.recip()));
            Ok(numerics::sub(theta0, &numerics::scale(&step, alpha)))
        }
        Method::Imaml { gamma } => {
            let system = x.gram().scale(n.recip()).add_diagonal(gamma);
            let rhs = numerics::add(
                &numerics::scale(&x.tr_mat_vec(y), n.recip()),
                &numerics::scale(theta0, gamma),
            );
            Ok(Cholesky::factor(&system)?.solve_vec(&rhs))
        }
        Method::Bamaml { gamma } => Ok(bamaml_posterior(theta0, x, y, gamma * n)?.mean),
    }
}

/// [`adapt`] on the train split of a dataset.
pub fn adapt_dataset<T: Real>(method: &Method<T>, theta0: &[T], ds: &TaskDataset<T>) -> Result<Vec<T>> {
    adapt(method, theta0, &ds.x_trn, &ds.y_trn)
}

fn check_adaptation_data<T: Real>(theta0: &[T], x: &Matrix<T>, y: &[T]) -> Result<()> {
    if x.nrows() == 0 {
        return Err(Error::Empty("adaptation set has no rows"));
    }
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            got: y.len(),
        });
    }
    if x.ncols() != theta0.len() {
        return Err(Error::DimensionMismatch {
            expected: x.ncols(),
            got: theta0.len(),
        });
    }
    Ok(())
}

/// Gaussian posterior over a task parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPosterior<T> {
    pub mean: Vec<T>,
    pub cov: SpdMatrix<T>,
}

impl<T: Real> GaussianPosterior<T> {
    /// Predictive mean and variance of `y` at `x` under unit observation noise.
    pub fn predictive(&self, x: &[T]) -> (T, T) {
        let mean = numerics::dot(&self.mean, x);
        let var = T::one() + self.cov.matrix().quadratic_form(x);
        (mean, var)
    }
}

/// Posterior of `θ_τ` under the prior `N(θ₀, I/γ_b)` and unit-variance Gaussian likelihood.
pub fn bamaml_posterior<T: Real>(
    theta0: &[T],
    x: &Matrix<T>,
    y: &[T],
    gamma_b: T,
) -> Result<GaussianPosterior<T>> {
    check_adaptation_data(theta0, x, y)?;
    check_gamma(gamma_b)?;
    let precision = Cholesky::factor(&x.gram().add_diagonal(gamma_b))?;
    let rhs = numerics::add(&x.tr_mat_vec(y), &numerics::scale(theta0, gamma_b));
    let mean = precision.solve_vec(&rhs);
    let cov = SpdMatrix::new(precision.inverse())?;
    Ok(GaussianPosterior { mean, cov })
}

/// Minimizer of the empirical meta loss over `T` task datasets.
pub fn fit_theta0<T: Real>(method: &Method<T>, datasets: &[TaskDataset<T>]) -> Result<Vec<T>> {
    let stats: Vec<TaskStats<T>> = datasets.par_iter().map(TaskStats::from_dataset).collect();
    fit_theta0_from_stats(method, &stats)
}

/// [`fit_theta0`] from precomputed statistics.
pub fn fit_theta0_from_stats<T: Real>(method: &Method<T>, stats: &[TaskStats<T>]) -> Result<Vec<T>> {
    let (weight, rhs) = accumulate_normal_equations(method, stats)?;
    let first = &stats[0];
    let chol = Cholesky::factor(&weight).map_err(|_| Error::Underdetermined {
        method: method.kind(),
        tasks: stats.len(),
        n_trn: first.n_trn,
        n_val: first.n_val,
        dim: first.dim(),
    })?;
    Ok(chol.solve_vec(&rhs))
}

/// `(Σ Ŵ_τ, Σ b_τ)`, summed in task order.
pub fn accumulate_normal_equations<T: Real>(
    method: &Method<T>,
    stats: &[TaskStats<T>],
) -> Result<(Matrix<T>, Vec<T>)> {
    let first = stats.first().ok_or(Error::Empty("no task datasets"))?;
    let d = first.dim();
    if let Some(bad) = stats.iter().find(|s| s.dim() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: bad.dim(),
        });
    }
    let terms: Vec<(Matrix<T>, Vec<T>)> = stats.par_iter().map(|s| normal_equation(method, s)).collect();
    let mut weight = Matrix::zeros(d, d);
    let mut rhs = vec![T::zero(); d];
    for (w, b) in &terms {
        weight.add_assign(w);
        for (r, &v) in rhs.iter_mut().zip(b) {
            *r = *r + v;
        }
    }
    Ok((weight, rhs))
}

/// Empirical meta loss of `theta0`, evaluated directly from the data.
///
/// ERM: pooled mean squared error. MAML, iMAML: validation mean squared
/// error of the adapted parameter. BaMAML: validation negative log marginal
/// likelihood given the train split, `−(1/N₂)·log p(y_val | y_trn, θ₀)`,
/// built from `N×N` predictive covariances. Averaged over tasks.
pub fn empirical_loss<T: Real>(method: &Method<T>, theta0: &[T], datasets: &[TaskDataset<T>]) -> Result<T> {
    if datasets.is_empty() {
        return Err(Error::Empty("no task datasets"));
    }
    let mut total = numerics::NeumaierSum::new();
    for ds in datasets {
        let loss = match *method {
            Method::Erm => mean_squared_residual(&ds.x_all(), &ds.y_all(), theta0),
            Method::Maml { .. } | Method::Imaml { .. } => {
                let theta = adapt_dataset(method, theta0, ds)?;
                mean_squared_residual(&ds.x_val, &ds.y_val, &theta)
            }
            Method::Bamaml { gamma } => {
                let gamma_b = gamma * T::of_usize(ds.n_trn());
                let all = marginal_log_likelihood(&ds.x_all(), &ds.y_all(), theta0, gamma_b)?;
                let trn = marginal_log_likelihood(&ds.x_trn, &ds.y_trn, theta0, gamma_b)?;
                -(all - trn) / T::of_usize(ds.n_val())
            }
        };
        total.add(loss);
    }
    Ok(total.value() / T::of_usize(datasets.len()))
}

fn mean_squared_residual<T: Real>(x: &Matrix<T>, y: &[T], theta: &[T]) -> T {
    let r = numerics::sub(y, &x.mat_vec(theta));
    numerics::dot(&r, &r) / T::of_usize(y.len())
}

/// `log N(y; Xθ₀, I + XXᵀ/γ_b)`.
fn marginal_log_likelihood<T: Real>(x: &Matrix<T>, y: &[T], theta0: &[T], gamma_b: T) -> Result<T> {
    let cov = x.matmul(&x.transpose()).scale(gamma_b.recip()).add_diagonal(T::one());
    let chol = Cholesky::factor(&cov)?;
    let r = numerics::sub(y, &x.mat_vec(theta0));
    let quad = numerics::dot(&r, &chol.solve_vec(&r));
    let n = T::of_usize(y.len());
    Ok(-T::of(0.5) * (quad + chol.log_det() + n * T::of(std::f64::consts::TAU).ln()))
}

/// Minimizer of the population risk over a finite task pool:
/// `(mean W_τ)⁻¹ (mean W_τ θ_τ)`.
pub fn optimal_theta0<T: Real>(method: &Method<T>, tasks: &[TaskSpec<T>], s: T) -> Result<Vec<T>> {
    let weights: Vec<Matrix<T>> = tasks
        .par_iter()
        .map(|t| population_weight(method, &t.q, s))
        .collect();
    solve_weighted_mean(method, tasks, &weights)
}

pub(crate) fn solve_weighted_mean<T: Real>(
    method: &Method<T>,
    tasks: &[TaskSpec<T>],
    weights: &[Matrix<T>],
) -> Result<Vec<T>> {
    let first = tasks.first().ok_or(Error::Empty("task pool is empty"))?;
    let d = first.dim();
    let mut sum_w = Matrix::zeros(d, d);
    let mut sum_wt = vec![T::zero(); d];
    for (t, w) in tasks.iter().zip(weights) {
        sum_w.add_assign(w);
        for (acc, v) in sum_wt.iter_mut().zip(w.mat_vec(&t.theta_gt)) {
            *acc = *acc + v;
        }
    }
    let chol = Cholesky::factor(&sum_w).map_err(|_| Error::DegenerateDistribution {
        method: method.kind(),
    })?;
    Ok(chol.solve_vec(&sum_wt))
}

/// Diagnostic `Δ_T = θ̂₀ − (Σ Ŵ_τ)⁻¹(Σ Ŵ_τ θ_τ)`: the part of the fitted
/// initialization driven by label noise. `tasks[i]` must have generated `datasets[i]`.
pub fn noise_offset<T: Real>(
    method: &Method<T>,
    datasets: &[TaskDataset<T>],
    tasks: &[TaskSpec<T>],
) -> Result<Vec<T>> {
    if datasets.len() != tasks.len() {
        return Err(Error::DimensionMismatch {
            expected: tasks.len(),
            got: datasets.len(),
        });
    }
    let fitted = fit_theta0(method, datasets)?;
    let weights: Vec<Matrix<T>> = datasets.par_iter().map(|ds| empirical_weight(method, ds)).collect();
    let noiseless = solve_weighted_mean(method, tasks, &weights).map_err(|_| Error::Underdetermined {
        method: method.kind(),
        tasks: datasets.len(),
        n_trn: datasets[0].n_trn(),
        n_val: datasets[0].n_val(),
        dim: datasets[0].dim(),
    })?;
    Ok(numerics::sub(&fitted, &noiseless))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_q(v: f64) -> SpdMatrix<f64> {
        SpdMatrix::new(Matrix::from_rows(&[[v]]).unwrap()).unwrap()
    }

    #[test]
    fn scalar_population_weights() {
        let q = scalar_q(1.0);
        let w = |m: Method<f64>, s: f64| population_weight(&m, &q, s)[(0, 0)];
        assert_eq!(w(Method::maml(0.0).unwrap(), 0.5), 1.0);
        assert!((w(Method::maml(0.5).unwrap(), 0.5) - 0.25).abs() < 1e-15);
        assert!((w(Method::bamaml(1.0).unwrap(), 0.5) - 1.0 / 6.0).abs() < 1e-15);
        assert!((w(Method::imaml(1.0).unwrap(), 0.5) - 0.25).abs() < 1e-15);
        assert_eq!(w(Method::erm(), 0.5), 1.0);
    }

    #[test]
    fn hyperparameter_validation() {
        assert!(Method::<f64>::maml(-0.1).is_err());
        assert!(Method::<f64>::imaml(0.0).is_err());
        assert!(Method::<f64>::bamaml(f64::NAN).is_err());
        assert!(Method::<f64>::maml(0.0).is_ok());
        assert_eq!("BaMAML".parse::<MethodKind>().unwrap(), MethodKind::Bamaml);
        assert!("sgd".parse::<MethodKind>().is_err());
    }

    #[test]
    fn erm_weight_of_two_points() {
        let ds = TaskDataset::new(
            Matrix::from_rows(&[[1.0]]).unwrap(),
            vec![0.0],
            Matrix::from_rows(&[[-1.0]]).unwrap(),
            vec![0.0],
        )
        .unwrap();
        assert_eq!(empirical_weight(&Method::erm(), &ds)[(0, 0)], 1.0);
    }

    #[test]
    fn maml_step_in_one_dimension() {
        let x = Matrix::from_rows(&[[1.0]]).unwrap();
        let out = adapt(&Method::maml(1.0).unwrap(), &[0.0], &x, &[2.0]).unwrap();
        assert_eq!(out, vec![2.0]);
        assert_eq!(adapt(&Method::erm(), &[0.3], &x, &[2.0]).unwrap(), vec![0.3]);
    }

    #[test]
    fn posterior_by_hand() {
        let x = Matrix::<f64>::from_rows(&[[1.0], [1.0]]).unwrap();
        let post = bamaml_posterior(&[0.0], &x, &[1.0, 3.0], 2.0).unwrap();
        assert!((post.mean[0] - 1.0).abs() < 1e-15);
        assert!((post.cov.matrix()[(0, 0)] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn posterior_grid_search_oracle() {
        // log posterior ∝ −½Σ(y − θ)² − (γ_b/2)θ², maximized on a grid
        let ys = [1.0, 3.0];
        let log_post = |t: f64| -0.5 * ys.iter().map(|y| (y - t) * (y - t)).sum::<f64>() - t * t;
        let best = (0..=40_000)
            .map(|i| -2.0 + i as f64 * 1e-4)
            .max_by(|a, b| log_post(*a).partial_cmp(&log_post(*b)).unwrap())
            .unwrap();
        assert!((best - 1.0).abs() < 1e-4);
        // curvature −d²/dθ² = n + γ_b = 4 ⇒ variance 1/4
        let h = 1e-3;
        let curvature = -(log_post(1.0 + h) - 2.0 * log_post(1.0) + log_post(1.0 - h)) / (h * h);
        assert!((1.0 / curvature - 0.25).abs() < 1e-6);
    }

    #[test]
    fn prior_dominates_for_huge_precision() {
        let x = Matrix::<f64>::from_rows(&[[1.0, 0.5], [0.2, -1.0], [2.0, 0.0]]).unwrap();
        let post = bamaml_posterior(&[0.7, -0.3], &x, &[1.0, 2.0, -1.0], 1e8).unwrap();
        assert!((post.mean[0] - 0.7).abs() < 1e-5 && (post.mean[1] + 0.3).abs() < 1e-5);
        assert!((post.cov.matrix()[(0, 0)] * 1e8 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn single_task_optimum_is_its_parameter() {
        let task = TaskSpec::new(vec![0.3, -1.2], SpdMatrix::new(Matrix::from_rows(&[[1.0, 0.2], [0.2, 0.5]]).unwrap()).unwrap()).unwrap();
        for m in [
            Method::erm(),
            Method::maml(0.3).unwrap(),
            Method::imaml(0.5).unwrap(),
            Method::bamaml(0.5).unwrap(),
        ] {
            let t0 = optimal_theta0(&m, std::slice::from_ref(&task), 0.5).unwrap();
            assert!(numerics::max_abs(&numerics::sub(&t0, &task.theta_gt)) < 1e-12, "{m}");
        }
    }

    #[test]
    fn erm_two_task_average() {
        let tasks: Vec<TaskSpec<f64>> = [0.0, 2.0]
            .iter()
            .map(|&t| TaskSpec::new(vec![t], scalar_q(1.0)).unwrap())
            .collect();
        assert!((optimal_theta0(&Method::erm(), &tasks, 0.5).unwrap()[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn maml_two_task_optimum_matches_golden_section() {
        let tasks = vec![
            TaskSpec::new(vec![0.0], scalar_q(1.0)).unwrap(),
            TaskSpec::new(vec![1.0], scalar_q(0.5)).unwrap(),
        ];
        let m = Method::maml(0.5).unwrap();
        // Oracle: golden-section search on the scalar risk (1−αλ)²λ(θ−θ_τ)² averaged.
        let risk = |t: f64| {
            tasks
                .iter()
                .map(|task| {
                    let l = task.q.matrix()[(0, 0)];
                    (1.0 - 0.5 * l).powi(2) * l * (t - task.theta_gt[0]).powi(2)
                })
                .sum::<f64>()
                / 2.0
        };
        let (mut a, mut b) = (-5.0, 5.0);
        let g = (5f64.sqrt() - 1.0) / 2.0;
        while b - a > 1e-12 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if risk(c) < risk(d) {
                b = d;
            } else {
                a = c;
            }
        }
        let oracle = (a + b) / 2.0;
        assert!((oracle - 0.52941).abs() < 1e-5);
        let t0 = optimal_theta0(&m, &tasks, 0.5).unwrap()[0];
        // golden-section search resolves a flat minimum only to about √ε
        assert!((t0 - oracle).abs() < 1e-7, "{t0} vs {oracle}");
    }

    #[test]
    fn degenerate_pool_is_reported() {
        // α = 1/λ zeroes the MAML weight of every task
        let tasks = vec![TaskSpec::new(vec![1.0], scalar_q(2.0)).unwrap()];
        let err = optimal_theta0(&Method::maml(0.5).unwrap(), &tasks, 0.5).unwrap_err();
        assert!(matches!(err, Error::DegenerateDistribution { method: MethodKind::Maml }));
    }

    #[test]
    fn empty_inputs_rejected() {
        assert!(fit_theta0::<f64>(&Method::erm(), &[]).is_err());
        assert!(optimal_theta0::<f64>(&Method::erm(), &[], 0.5).is_err());
    }
}
