//! Closed-form meta linear regression.
//!
//! Four meta-learners are implemented for the linear-Gaussian task model
//! `y = x·θ_τ + ε`, `x ~ N(0, Q_τ)`, `ε ~ N(0, 1)`:
//!
//! * ERM, pooled least squares with no per-task adaptation,
//! * one-step MAML, a single gradient step of size `α/2` from the shared initialization,
//! * iMAML, the ridge-regularized per-task minimizer,
//! * BaMAML, the full Gaussian posterior with prior `N(θ₀, I/(γ·N₁))`.
//!
//! Every learner reduces to a weighted least-squares problem in the shared
//! initialization `θ₀`. The [`estimators`] module builds the population and
//! empirical weight matrices and solves the normal equations, [`risk`]
//! evaluates meta-test risks and their decomposition into optimal population
//! risk plus statistical error, and [`constants`] estimates the dominating
//! statistical-error constants and their high-dimensional limits.
//!
//! The numerical core is generic over the scalar type (`f32` or `f64`); the
//! experiment drivers in [`experiments`] and [`verify`] run in `f64`, and the
//! aliases below name the `f64` instantiations.

pub mod constants;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod numerics;
pub mod risk;
pub mod taskgen;
pub mod verify;

pub use error::{Error, Result};
pub use estimators::{Method, MethodKind};
pub use numerics::{Matrix, Real, Rng, SpdMatrix};

/// Dense `f64` matrix.
pub type Mat = numerics::Matrix<f64>;
/// Symmetric positive definite `f64` matrix.
pub type Spd = numerics::SpdMatrix<f64>;
/// `f64` task specification.
pub type Task = taskgen::TaskSpec<f64>;
/// `f64` task dataset.
pub type Dataset = taskgen::TaskDataset<f64>;
/// `f64` task sufficient statistics.
pub type Stats = estimators::TaskStats<f64>;
/// `f64` learner configuration.
pub type MethodF64 = estimators::Method<f64>;
/// `f64` risk report.
pub type Report = risk::RiskReport<f64>;
