//! Meta-test risk, its decomposition and Monte Carlo adapted test loss.
//!
//! Expectations over tasks are averages over a finite task pool. With the
//! pool fixed, `θ₀*` is its exact risk minimizer and
//! `R(θ̂₀) = R(θ₀*) + ‖θ̂₀ − θ₀*‖²_{mean W}` holds to rounding.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators::{self, population_weight, Method};
use crate::numerics::{self, Matrix, NeumaierSum, Real, Rng};
use crate::taskgen::{sample_labelled, Noise, TaskDataset, TaskSpec};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskReport<T> {
    pub optimal_population_risk: T,
    pub statistical_error: T,
    /// `R(θ̂₀)`, evaluated directly rather than as the sum of the other two.
    pub total_risk: T,
    #[serde(skip)]
    pub method: Method<T>,
    pub theta0_hat: Vec<T>,
    pub theta0_star: Vec<T>,
}

impl<T: Real> RiskReport<T> {
    /// `|total − optimal − statistical| / total`.
    pub fn decomposition_residual(&self) -> T {
        (self.total_risk - self.optimal_population_risk - self.statistical_error).abs() / self.total_risk
    }
}

/// Population weights of a method over a fixed task pool, with the cached optimum.
#[derive(Debug, Clone)]
pub struct Population<'a, T> {
    method: Method<T>,
    tasks: &'a [TaskSpec<T>],
    weights: Vec<Matrix<T>>,
    mean_weight: Matrix<T>,
    theta0_star: Vec<T>,
    optimal_risk: T,
}

impl<'a, T: Real> Population<'a, T> {
    pub fn new(method: Method<T>, tasks: &'a [TaskSpec<T>], s: T) -> Result<Self> {
        if tasks.is_empty() {
            return Err(Error::Empty("task pool is empty"));
        }
        let weights: Vec<Matrix<T>> = tasks
            .par_iter()
            .map(|t| population_weight(&method, &t.q, s))
            .collect();
        let theta0_star = estimators::solve_weighted_mean(&method, tasks, &weights)?;
        let d = tasks[0].dim();
        let mut mean_weight = Matrix::zeros(d, d);
        for w in &weights {
            mean_weight.add_assign(w);
        }
        let mean_weight = mean_weight.scale(T::one() / T::of_usize(tasks.len()));
        let optimal_risk = mean_quadratic(tasks, &weights, &theta0_star) + T::one();
        Ok(Self {
            method,
            tasks,
            weights,
            mean_weight,
            theta0_star,
            optimal_risk,
        })
    }

    pub fn method(&self) -> &Method<T> {
        &self.method
    }

    pub fn theta0_star(&self) -> &[T] {
        &self.theta0_star
    }

    pub fn mean_weight(&self) -> &Matrix<T> {
        &self.mean_weight
    }

    /// `R(θ₀*)`.
    pub fn optimal_risk(&self) -> T {
        self.optimal_risk
    }

    /// `R(θ₀)`.
    pub fn risk(&self, theta0: &[T]) -> T {
        mean_quadratic(self.tasks, &self.weights, theta0) + T::one()
    }

    pub fn statistical_error(&self, theta0_hat: &[T]) -> T {
        self.mean_weight
            .quadratic_form(&numerics::sub(theta0_hat, &self.theta0_star))
    }

    pub fn report(&self, theta0_hat: Vec<T>) -> RiskReport<T> {
        RiskReport {
            optimal_population_risk: self.optimal_risk,
            statistical_error: self.statistical_error(&theta0_hat),
            total_risk: self.risk(&theta0_hat),
            method: self.method,
            theta0_hat,
            theta0_star: self.theta0_star.clone(),
        }
    }
}

fn mean_quadratic<T: Real>(tasks: &[TaskSpec<T>], weights: &[Matrix<T>], theta0: &[T]) -> T {
    let terms: Vec<T> = tasks
        .par_iter()
        .zip(weights)
        .map(|(t, w)| w.quadratic_form(&numerics::sub(theta0, &t.theta_gt)))
        .collect();
    terms.into_iter().collect::<NeumaierSum<T>>().value() / T::of_usize(tasks.len())
}

/// `mean_τ ‖θ₀ − θ_τ‖²_{W_τ} + 1`.
pub fn population_risk<T: Real>(method: &Method<T>, theta0: &[T], tasks: &[TaskSpec<T>], s: T) -> T {
    assert!(!tasks.is_empty(), "population risk over an empty task list");
    let weights: Vec<Matrix<T>> = tasks
        .par_iter()
        .map(|t| population_weight(method, &t.q, s))
        .collect();
    mean_quadratic(tasks, &weights, theta0) + T::one()
}

/// `‖θ̂₀ − θ₀*‖²` in the mean population weight.
pub fn statistical_error<T: Real>(
    method: &Method<T>,
    theta0_hat: &[T],
    theta0_star: &[T],
    tasks: &[TaskSpec<T>],
    s: T,
) -> T {
    assert!(!tasks.is_empty(), "statistical error over an empty task list");
    let d = theta0_hat.len();
    let mut mean = Matrix::zeros(d, d);
    for t in tasks {
        mean.add_assign(&population_weight(method, &t.q, s));
    }
    mean.scale(T::one() / T::of_usize(tasks.len()))
        .quadratic_form(&numerics::sub(theta0_hat, theta0_star))
}

/// Fits `θ̂₀` on the datasets and decomposes its risk over the task pool.
pub fn decompose<T: Real>(
    method: &Method<T>,
    datasets: &[TaskDataset<T>],
    tasks: &[TaskSpec<T>],
    s: T,
) -> Result<RiskReport<T>> {
    let theta0_hat = estimators::fit_theta0(method, datasets)?;
    Ok(Population::new(*method, tasks, s)?.report(theta0_hat))
}

/// Loss used to score adapted predictions on held-out points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestLoss {
    #[default]
    Squared,
    /// Gaussian negative log predictive density. Point learners use unit
    /// predictive variance; BaMAML adds its posterior variance.
    Nll,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptedLossOptions {
    pub n_adapt: usize,
    pub n_test: usize,
    pub loss: TestLoss,
    pub noise: Noise,
}

impl AdaptedLossOptions {
    pub fn new(n_adapt: usize, n_test: usize) -> Self {
        Self {
            n_adapt,
            n_test,
            loss: TestLoss::Squared,
            noise: Noise::Gaussian,
        }
    }
}

/// Adapts `theta0` on fresh task data and returns its mean loss on fresh test points.
pub fn adapted_test_loss<T: Real>(
    method: &Method<T>,
    theta0: &[T],
    task: &TaskSpec<T>,
    rng: &mut Rng,
    opts: AdaptedLossOptions,
) -> Result<T> {
    if opts.n_adapt == 0 || opts.n_test == 0 {
        return Err(Error::InvalidDimension(
            "adaptation and test sets need at least one point".into(),
        ));
    }
    let (xa, ya) = sample_labelled(rng, task, opts.n_adapt, opts.noise)?;
    let (xt, yt) = sample_labelled(rng, task, opts.n_test, opts.noise)?;
    let mut total = NeumaierSum::new();
    match (method, opts.loss) {
        (Method::Bamaml { gamma }, TestLoss::Nll) => {
            let post = estimators::bamaml_posterior(theta0, &xa, &ya, *gamma * T::of_usize(opts.n_adapt))?;
            for (i, &y) in yt.iter().enumerate() {
                let (m, v) = post.predictive(xt.row(i));
                total.add(gaussian_nll(y, m, v));
            }
        }
        _ => {
            let theta = estimators::adapt(method, theta0, &xa, &ya)?;
            let pred = xt.mat_vec(&theta);
            for (&y, &p) in yt.iter().zip(&pred) {
                total.add(match opts.loss {
                    TestLoss::Squared => (y - p) * (y - p),
                    TestLoss::Nll => gaussian_nll(y, p, T::one()),
                });
            }
        }
    }
    Ok(total.value() / T::of_usize(opts.n_test))
}

fn gaussian_nll<T: Real>(y: T, mean: T, var: T) -> T {
    let two_pi = T::of(std::f64::consts::TAU);
    T::of(0.5) * ((two_pi * var).ln() + (y - mean) * (y - mean) / var)
}
