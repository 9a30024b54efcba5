//! Dominating statistical-error constants and their high-dimensional limits.
//!
//! Under isotropic features the leading statistical-error coefficient of a
//! learner is the trace ratio
//! `C̃₀ = (1/d)E[tr Ŵ²] / ((1/d)E[tr Ŵ])²`, which is at least 1 by Jensen.
//! [`dominating_constant_mc`] estimates it by sampling Gaussian designs;
//! [`stieltjes`] gives the Marchenko–Pastur limit of `(1/d)tr((ω₁I + ω₂Q̂)⁻¹)`
//! from which the asymptotic constants follow.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators::{stats_weight, Method, MethodKind, TaskStats};
use crate::numerics::{standard_gaussian_matrix, NeumaierSum, Rng};
use crate::taskgen::{split_sizes, TaskDistribution};

/// Configuration a constant was estimated at.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstantConfig {
    pub method: MethodKind,
    pub hyperparameter: Option<f64>,
    pub d: usize,
    pub n: usize,
    pub s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstantEstimate {
    pub value: f64,
    pub mc_std_error: f64,
    pub n_samples: usize,
    pub config: ConstantConfig,
}

impl ConstantEstimate {
    /// Jensen lower bound `C̃₀ ≥ 1`, allowing three standard errors.
    pub fn satisfies_lower_bound(&self) -> bool {
        self.value >= 1.0 - 3.0 * self.mc_std_error
    }
}

const BLOCK: usize = 64;

/// Monte Carlo trace-ratio estimate of `C̃₀` with a delta-method standard error.
///
/// Only the linear centroid regime has `E[Ŵ] ∝ I`, which the trace form needs;
/// other regimes are rejected. Labels never enter `Ŵ`, so only designs are sampled.
pub fn dominating_constant_mc(
    method: &Method<f64>,
    dist: &TaskDistribution<f64>,
    n: usize,
    s: f64,
    rng: &Rng,
    n_samples: usize,
) -> Result<ConstantEstimate> {
    if !dist.is_linear_centroid() {
        return Err(Error::RegimeMismatch(
            "the trace-ratio constant needs isotropic features (linear centroid regime)".into(),
        ));
    }
    isotropic_constant_mc(method, dist.dim(), n, s, rng, n_samples)
}

/// [`dominating_constant_mc`] with standard Gaussian features of dimension `d`.
pub fn isotropic_constant_mc(
    method: &Method<f64>,
    d: usize,
    n: usize,
    s: f64,
    rng: &Rng,
    n_samples: usize,
) -> Result<ConstantEstimate> {
    if d == 0 {
        return Err(Error::InvalidDimension("d must be positive".into()));
    }
    if n_samples < 100 {
        return Err(Error::InvalidHyperparameter(format!(
            "at least 100 Monte Carlo samples are needed, got {n_samples}"
        )));
    }
    let (n_trn, n_val) = split_sizes(n, s)?;
    let blocks = n_samples.div_ceil(BLOCK);
    let sums: Vec<Moments> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut r = rng.derive(b as u64);
            let count = BLOCK.min(n_samples - b * BLOCK);
            let mut m = Moments::default();
            for _ in 0..count {
                let x_trn = standard_gaussian_matrix(&mut r, n_trn, d);
                let x_val = standard_gaussian_matrix(&mut r, n_val, d);
                let w = stats_weight(method, &TaskStats::from_features(&x_trn, &x_val));
                let df = d as f64;
                m.push(w.frobenius_dot(&w) / df, w.trace() / df);
            }
            m
        })
        .collect();
    let mut total = Moments::default();
    for m in &sums {
        total.merge(m);
    }
    let (value, mc_std_error) = total.ratio();
    Ok(ConstantEstimate {
        value,
        mc_std_error,
        n_samples,
        config: ConstantConfig {
            method: method.kind(),
            hyperparameter: method.hyperparameter().map(|(_, v)| v),
            d,
            n,
            s,
        },
    })
}

/// Running sums for the ratio `E[a] / E[b]²`.
#[derive(Debug, Default, Clone)]
struct Moments {
    n: usize,
    a: NeumaierSum<f64>,
    b: NeumaierSum<f64>,
    aa: NeumaierSum<f64>,
    bb: NeumaierSum<f64>,
    ab: NeumaierSum<f64>,
}

impl Moments {
    fn push(&mut self, a: f64, b: f64) {
        self.n += 1;
        self.a.add(a);
        self.b.add(b);
        self.aa.add(a * a);
        self.bb.add(b * b);
        self.ab.add(a * b);
    }

    fn merge(&mut self, o: &Self) {
        self.n += o.n;
        self.a.merge(&o.a);
        self.b.merge(&o.b);
        self.aa.merge(&o.aa);
        self.bb.merge(&o.bb);
        self.ab.merge(&o.ab);
    }

    fn ratio(&self) -> (f64, f64) {
        let n = self.n as f64;
        let (ma, mb) = (self.a.value() / n, self.b.value() / n);
        let var_a = (self.aa.value() / n - ma * ma).max(0.0);
        let var_b = (self.bb.value() / n - mb * mb).max(0.0);
        let cov = self.ab.value() / n - ma * mb;
        let r = ma / (mb * mb);
        // gradient of a/b² is (1/b², −2a/b³)
        let (ga, gb) = (1.0 / (mb * mb), -2.0 * ma / (mb * mb * mb));
        let var = ga * ga * var_a + gb * gb * var_b + 2.0 * ga * gb * cov;
        (r, (var.max(0.0) * n / (n - 1.0) / n).sqrt())
    }
}

/// `C̃₀` of ERM in closed form: `(d + N + 1)/N`.
pub fn erm_constant_exact(d: usize, n: usize) -> f64 {
    (d + n + 1) as f64 / n as f64
}

/// Limit of `(1/d)tr((ω₁I + ω₂Q̂)⁻¹)` for Wishart `Q̂` with aspect ratio `η = d/N`.
///
/// Evaluated as `(1 − 2/(a + r))/ω₁` with `a = ω₁/ω₂ + 1 + η`, `r = √(a² − 4η)`,
/// which avoids the cancellation in the textbook form when `ω₁/ω₂` is large.
pub fn stieltjes(omega1: f64, omega2: f64, eta: f64) -> f64 {
    let (a, r) = stieltjes_terms(omega1, omega2, eta);
    (1.0 - 2.0 / (a + r)) / omega1
}

/// Limit of `(1/d)tr((ω₁I + ω₂Q̂)⁻²)`, i.e. `−∂s/∂ω₁`.
pub fn stieltjes_second_moment(omega1: f64, omega2: f64, eta: f64) -> f64 {
    let (a, r) = stieltjes_terms(omega1, omega2, eta);
    let u = a + r;
    (1.0 - 2.0 / u) / (omega1 * omega1) - 2.0 / (omega1 * u * r * omega2)
}

fn stieltjes_terms(omega1: f64, omega2: f64, eta: f64) -> (f64, f64) {
    assert!(
        omega1 > 0.0 && omega2 > 0.0 && eta > 0.0,
        "stieltjes arguments must be positive"
    );
    let a = omega1 / omega2 + 1.0 + eta;
    // a² − 4η = (a − 2√η)(a + 2√η) > 0 since a > 1 + η ≥ 2√η
    let r = ((a - 2.0 * eta.sqrt()) * (a + 2.0 * eta.sqrt())).sqrt();
    (a, r)
}

/// Infimum over hyperparameters of the limiting constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticConstant {
    pub value: f64,
    /// Only an upper bound is known (BaMAML with `η > 1`).
    pub is_upper_bound: bool,
}

pub fn asymptotic_constant(kind: MethodKind, eta: f64) -> AsymptoticConstant {
    assert!(eta > 0.0, "eta must be positive");
    match kind {
        MethodKind::Erm | MethodKind::Maml | MethodKind::Imaml => AsymptoticConstant {
            value: 1.0 + eta,
            is_upper_bound: false,
        },
        MethodKind::Bamaml if eta <= 1.0 => AsymptoticConstant {
            value: 1.0,
            is_upper_bound: false,
        },
        MethodKind::Bamaml => AsymptoticConstant {
            value: eta,
            is_upper_bound: true,
        },
    }
}

/// `w_A` with `W_τ = w_A·I` under identity feature covariance.
pub fn weight_scale(method: &Method<f64>, s: f64) -> f64 {
    match *method {
        Method::Erm => 1.0,
        Method::Maml { alpha } => (1.0 - alpha).powi(2),
        Method::Imaml { gamma } => (1.0 + 1.0 / gamma).powi(-2),
        Method::Bamaml { gamma } => 1.0 / ((1.0 + 1.0 / (gamma * s)) * (1.0 + 1.0 / gamma)),
    }
}

/// Whether `a` exceeds `b` by more than three combined standard errors.
pub fn strictly_greater(a: &ConstantEstimate, b: &ConstantEstimate) -> bool {
    let se = (a.mc_std_error.powi(2) + b.mc_std_error.powi(2)).sqrt();
    a.value - b.value > 3.0 * se
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Ordering {
    /// MAML's grid minimum exceeds BaMAML's beyond combined 3σ.
    Strict,
    Indistinguishable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantGrids {
    pub alpha: Vec<f64>,
    pub gamma: Vec<f64>,
    pub s: Vec<f64>,
}

impl ConstantGrids {
    /// Grids reaching the infimizing corners: tiny `α` with a one-point train
    /// split for MAML, and both small and large `γ` for BaMAML.
    pub fn for_n(n: usize) -> Self {
        Self {
            alpha: vec![1e-3, 0.01, 0.05, 0.1, 0.2],
            gamma: vec![1e-3, 1e-2, 0.1, 1.0, 10.0, 1e3],
            s: vec![1.0 / n as f64, 0.1, 0.25, 0.5],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderingReport {
    pub maml_min: ConstantEstimate,
    pub bamaml_min: ConstantEstimate,
    pub ordering: Ordering,
    pub maml_target: AsymptoticConstant,
    pub bamaml_target: AsymptoticConstant,
    /// Every grid estimate, MAML first.
    pub estimates: Vec<ConstantEstimate>,
}

impl OrderingReport {
    pub fn is_strict(&self) -> bool {
        self.ordering == Ordering::Strict
    }
}

/// Grid infima of the MAML and BaMAML constants at `(d, N)` and their ordering.
///
/// Each grid point reuses the same random stream, so the estimates share
/// designs and their differences carry less noise.
pub fn constant_ordering_check(
    d: usize,
    n: usize,
    n_samples: usize,
    grids: &ConstantGrids,
    rng: &Rng,
) -> Result<OrderingReport> {
    if grids.alpha.is_empty() || grids.gamma.is_empty() || grids.s.is_empty() {
        return Err(Error::Empty("constant grids"));
    }
    let mut methods = Vec::new();
    for &alpha in &grids.alpha {
        for &s in &grids.s {
            methods.push((Method::maml(alpha)?, s));
        }
    }
    let n_maml = methods.len();
    for &gamma in &grids.gamma {
        for &s in &grids.s {
            methods.push((Method::bamaml(gamma)?, s));
        }
    }
    let estimates = methods
        .iter()
        .map(|(m, s)| isotropic_constant_mc(m, d, n, *s, rng, n_samples))
        .collect::<Result<Vec<_>>>()?;
    let argmin = |xs: &[ConstantEstimate]| {
        *xs.iter()
            .min_by(|a, b| a.value.total_cmp(&b.value))
            .expect("non-empty grid")
    };
    let maml_min = argmin(&estimates[..n_maml]);
    let bamaml_min = argmin(&estimates[n_maml..]);
    let eta = d as f64 / n as f64;
    Ok(OrderingReport {
        maml_min,
        bamaml_min,
        ordering: if strictly_greater(&maml_min, &bamaml_min) {
            Ordering::Strict
        } else {
            Ordering::Indistinguishable
        },
        maml_target: asymptotic_constant(MethodKind::Maml, eta),
        bamaml_target: asymptotic_constant(MethodKind::Bamaml, eta),
        estimates,
    })
}
