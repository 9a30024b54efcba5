//! Self-check suite: every module's invariants run with fixed seeds and
//! collected into a JSON-serializable report.
//!
//! Failing checks are recorded, never fatal, so one run reports everything.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::constants::{self, ConstantEstimate, ConstantGrids, OrderingReport};
use crate::error::{Error, Result};
use crate::estimators::{self, empirical_loss, fit_theta0, Method, TaskStats};
use crate::experiments::{realized_split, sample_trial, task_pool, Summary};
use crate::numerics::{self, random_orthogonal, standard_gaussian_matrix, Cholesky, Matrix, Rng, SpdMatrix};
use crate::risk::{adapted_test_loss, AdaptedLossOptions, Population};
use crate::taskgen::{self, sample_dataset, sample_task, split_sizes, Noise, TaskDistribution, TaskSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Module {
    Numerics,
    Taskgen,
    Estimators,
    Risk,
    Constants,
}

impl Module {
    pub const ALL: [Module; 5] = [
        Module::Numerics,
        Module::Taskgen,
        Module::Estimators,
        Module::Risk,
        Module::Constants,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Module::Numerics => "numerics",
            Module::Taskgen => "taskgen",
            Module::Estimators => "estimators",
            Module::Risk => "risk",
            Module::Constants => "constants",
        }
    }
}

impl fmt::Display for Module {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Module {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Module::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidHyperparameter(format!("subset: unknown module '{s}'")))
    }
}

/// Deliberate faults for testing that the suite catches them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Fault {
    /// Negates the mean MAML weight in the statistical-error term.
    FlipMamlWeightSign,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct VerifyOptions {
    pub subset: Option<Module>,
    pub fault: Option<Fault>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub module: Module,
    pub passed: bool,
    pub measured: f64,
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub fault: Option<Fault>,
    pub checks: Vec<Check>,
    /// Every Monte Carlo constant estimated during the run.
    pub constant_estimates: Vec<ConstantEstimate>,
    pub ordering: Option<OrderingReport>,
}

impl VerifyReport {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

struct Suite {
    module: Module,
    fault: Option<Fault>,
    checks: Vec<Check>,
    estimates: Vec<ConstantEstimate>,
    ordering: Option<OrderingReport>,
}

impl Suite {
    /// Records `measured ≤ tolerance` (or an error) under `name`.
    fn bound(&mut self, name: &str, detail: &str, tolerance: f64, measured: Result<f64>) {
        let (passed, measured, detail) = match measured {
            Ok(v) => (v <= tolerance, v, detail.to_string()),
            Err(e) => (false, f64::NAN, format!("{detail}: {e}")),
        };
        self.checks.push(Check {
            name: format!("{}.{name}", self.module),
            module: self.module,
            passed,
            measured,
            tolerance,
            detail,
        });
    }

    /// Records a boolean outcome with its witness value.
    fn holds(&mut self, name: &str, detail: &str, outcome: Result<(bool, f64)>) {
        let (passed, measured, detail) = match outcome {
            Ok((ok, v)) => (ok, v, detail.to_string()),
            Err(e) => (false, f64::NAN, format!("{detail}: {e}")),
        };
        self.checks.push(Check {
            name: format!("{}.{name}", self.module),
            module: self.module,
            passed,
            measured,
            tolerance: 0.0,
            detail,
        });
    }
}

pub fn run_verify(opts: VerifyOptions) -> VerifyReport {
    let mut checks = Vec::new();
    let mut estimates = Vec::new();
    let mut ordering = None;
    for module in Module::ALL {
        if opts.subset.is_some_and(|s| s != module) {
            continue;
        }
        let mut suite = Suite {
            module,
            fault: opts.fault,
            checks: Vec::new(),
            estimates: Vec::new(),
            ordering: None,
        };
        match module {
            Module::Numerics => numerics_checks(&mut suite),
            Module::Taskgen => taskgen_checks(&mut suite),
            Module::Estimators => estimator_checks(&mut suite),
            Module::Risk => risk_checks(&mut suite),
            Module::Constants => constant_checks(&mut suite),
        }
        checks.append(&mut suite.checks);
        estimates.append(&mut suite.estimates);
        ordering = ordering.or(suite.ordering);
    }
    VerifyReport {
        passed: checks.iter().all(|c| c.passed),
        fault: opts.fault,
        checks,
        constant_estimates: estimates,
        ordering,
    }
}

fn numerics_checks(suite: &mut Suite) {
    suite.bound(
        "cholesky_residual",
        "max |A·x − b| for a random 12×12 SPD system",
        1e-10,
        (|| {
            let mut rng = Rng::new(100);
            let g: Matrix<f64> = standard_gaussian_matrix(&mut rng, 20, 12);
            let a = SpdMatrix::new(g.gram().add_diagonal(0.5))?;
            let b: Vec<f64> = (0..12).map(|_| rng.standard_normal()).collect();
            let x = a.cholesky().solve_vec(&b);
            Ok(numerics::max_abs(&numerics::sub(&a.matrix().mat_vec(&x), &b)))
        })(),
    );
    suite.bound(
        "orthogonal_sampling",
        "max |QᵀQ − I| plus |det Q − 1| for a random 6×6 rotation",
        1e-12,
        (|| {
            let q: Matrix<f64> = random_orthogonal(&mut Rng::new(101), 6)?;
            let gap = q.transpose().matmul(&q).sub(&Matrix::identity(6)).max_abs();
            Ok(gap + (numerics::determinant(&q) - 1.0).abs())
        })(),
    );
    suite.holds(
        "rng_substreams",
        "derived streams depend only on seed and key",
        (|| {
            let root = Rng::new(102);
            let mut advanced = root.clone();
            advanced.standard_normal();
            let a = root.derive(5).standard_normal();
            let b = advanced.derive(5).standard_normal();
            let c = root.derive(6).standard_normal();
            Ok((a == b && a != c, a - b))
        })(),
    );
}

fn taskgen_checks(suite: &mut Suite) {
    suite.holds(
        "split_rounding",
        "N₁ = round(sN) with halves away from zero",
        Ok({
            let ok = split_sizes(5, 0.5).ok() == Some((3, 2))
                && split_sizes(10, 0.25).ok() == Some((3, 7))
                && split_sizes(10, 0.99).is_err();
            (ok, 0.0)
        }),
    );
    suite.bound(
        "covariance_concentration",
        "max |Q̂ − Q| from 20000 rows of a general 3-dimensional task",
        0.05,
        (|| {
            let mut rng = Rng::new(200);
            let dist = TaskDistribution::<f64>::general(&mut rng, 3)?;
            let task = sample_task(&mut rng, &dist)?;
            let (x, _) = taskgen::sample_labelled(&mut rng, &task, 20_000, Noise::Gaussian)?;
            Ok(taskgen::empirical_q(&x)?.sub(task.q.matrix()).max_abs())
        })(),
    );
    suite.bound(
        "centroid_dispersion",
        "|mean ‖θ − c‖² − R²| over 4000 centroid-model tasks (d = 4, R = 1.5)",
        0.1,
        (|| {
            let dist = TaskDistribution::linear_centroid(vec![1.0; 4], 1.5)?;
            let mut rng = Rng::new(201);
            let mut total = 0.0;
            for _ in 0..4000 {
                let t = sample_task(&mut rng, &dist)?;
                total += t.theta_gt.iter().map(|v| (v - 1.0) * (v - 1.0)).sum::<f64>();
            }
            Ok((total / 4000.0 - 2.25).abs())
        })(),
    );
}

fn estimator_checks(suite: &mut Suite) {
    suite.bound(
        "posterior_ridge_identity",
        "max relative gap between the posterior mean (γ_b = γN₁) and the ridge adaptation, 100 instances",
        1e-12,
        posterior_ridge_gap(100, 300),
    );
    suite.holds(
        "fit_optimality_certificate",
        "no ±1e-4 axis perturbation of the fitted θ̂₀ lowers the empirical loss",
        fit_certificate(),
    );
    suite.bound(
        "maml_zero_step_is_validation_erm",
        "max |θ̂₀(MAML, α = 0) − validation-split least squares|",
        1e-10,
        (|| {
            let mut rng = Rng::new(302);
            let dist = TaskDistribution::<f64>::general(&mut rng, 2)?;
            let mut datasets = Vec::new();
            for _ in 0..6 {
                let task = sample_task(&mut rng, &dist)?;
                datasets.push(sample_dataset(&mut rng, &task, 8, 0.5)?);
            }
            let fitted = fit_theta0(&Method::maml(0.0)?, &datasets)?;
            let mut gram = Matrix::zeros(2, 2);
            let mut xty = vec![0.0; 2];
            for ds in &datasets {
                gram.add_assign(&ds.x_val.gram());
                xty = numerics::add(&xty, &ds.x_val.tr_mat_vec(&ds.y_val));
            }
            let ols = Cholesky::factor(&gram)?.solve_vec(&xty);
            Ok(numerics::max_abs(&numerics::sub(&fitted, &ols)))
        })(),
    );
}

/// Largest relative gap between BaMAML's posterior mean and iMAML's adaptation.
pub fn posterior_ridge_gap(instances: usize, seed: u64) -> Result<f64> {
    let root = Rng::new(seed);
    let mut worst: f64 = 0.0;
    for i in 0..instances {
        let mut rng = root.derive(i as u64);
        let d = 1 + rng.index(5);
        let n = 1 + rng.index(12);
        let gamma = 10f64.powf(rng.uniform(-3.0, 2.0));
        let x: Matrix<f64> = standard_gaussian_matrix(&mut rng, n, d);
        let y: Vec<f64> = (0..n).map(|_| 2.0 * rng.standard_normal()).collect();
        let theta0: Vec<f64> = (0..d).map(|_| rng.uniform(-2.0, 2.0)).collect();
        let post = estimators::bamaml_posterior(&theta0, &x, &y, gamma * n as f64)?;
        let ridge = estimators::adapt(&Method::imaml(gamma)?, &theta0, &x, &y)?;
        let scale = numerics::max_abs(&ridge).max(1.0);
        worst = worst.max(numerics::max_abs(&numerics::sub(&post.mean, &ridge)) / scale);
    }
    Ok(worst)
}

fn fit_certificate() -> Result<(bool, f64)> {
    let mut rng = Rng::new(301);
    let dist = TaskDistribution::<f64>::general(&mut rng, 3)?;
    let mut datasets = Vec::new();
    for _ in 0..8 {
        let task = sample_task(&mut rng, &dist)?;
        datasets.push(sample_dataset(&mut rng, &task, 12, 0.5)?);
    }
    let mut worst = f64::INFINITY;
    for m in [
        Method::erm(),
        Method::maml(0.3)?,
        Method::imaml(0.5)?,
        Method::bamaml(0.5)?,
    ] {
        let theta = fit_theta0(&m, &datasets)?;
        let base = empirical_loss(&m, &theta, &datasets)?;
        for j in 0..theta.len() {
            for step in [1e-4, -1e-4] {
                let mut p = theta.clone();
                p[j] += step;
                // rounding in the loss is far below the O(h²) increase
                let increase = empirical_loss(&m, &p, &datasets)? - base;
                worst = worst.min(increase);
            }
        }
    }
    Ok((worst > 0.0, worst))
}

fn risk_checks(suite: &mut Suite) {
    let fault = suite.fault;
    suite.bound(
        "decomposition_identity",
        "risk decomposition identity: max |R(θ̂₀) − R(θ₀*) − statistical error| / R(θ̂₀) over methods, d ∈ {1, 2, 5} and seeds",
        1e-8,
        decomposition_residual(12, 400, fault),
    );

    let pool = match task_pool(1, 10_000, 0) {
        Ok(p) => p,
        Err(e) => {
            suite.bound("task_pool", "scalar task pool", 0.0, Err(e));
            return;
        }
    };
    let optimal = |m: Method<f64>| Population::new(m, &pool, 0.5).map(|p| p.optimal_risk());
    suite.bound(
        "bamaml_small_gamma_limit",
        "R^ba(θ₀*) − 1 at γ = 1e-6 on a 10⁴-task scalar pool",
        1e-3,
        optimal(Method::Bamaml { gamma: 1e-6 }).and_then(|r| {
            if r < 1.0 {
                Err(Error::InvalidDistribution(format!("risk {r} below the noise floor")))
            } else {
                Ok(r - 1.0)
            }
        }),
    );
    suite.bound(
        "bamaml_large_gamma_limit",
        "|R^ba(θ₀*) at γ = 1e6 − R^er(θ₀*)| on a 10⁴-task scalar pool",
        1e-3,
        (|| Ok((optimal(Method::Bamaml { gamma: 1e6 })? - optimal(Method::Erm)?).abs()))(),
    );
    suite.holds(
        "bamaml_beats_best_maml",
        "some γ in 10⁻³…10¹ gives BaMAML a lower optimal risk than every α on the MAML grid (witness: gap)",
        (|| {
            let mut best_maml = f64::INFINITY;
            for alpha in [0.01, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 1.0, 1.5, 2.0] {
                best_maml = best_maml.min(optimal(Method::maml(alpha)?)?);
            }
            let mut best_ba = f64::INFINITY;
            for k in 0..=8 {
                best_ba = best_ba.min(optimal(Method::bamaml(10f64.powf(-3.0 + 0.5 * k as f64))?)?);
            }
            Ok((best_ba < best_maml, best_maml - best_ba))
        })(),
    );
    suite.bound(
        "adapted_loss_matches_population_risk",
        "relative gap between R^ma(θ₀*) and the adapted test loss with N_a = 10⁴ (α = 0.7, 2000 pool tasks)",
        0.02,
        (|| {
            let m = Method::maml(0.7)?;
            let pop = Population::new(m, &pool, 0.5)?;
            let mut rng = Rng::new(402);
            let opts = AdaptedLossOptions::new(10_000, 200);
            let mut total = 0.0;
            for _ in 0..2000 {
                let task = &pool[rng.index(pool.len())];
                total += adapted_test_loss(&m, pop.theta0_star(), task, &mut rng, opts)?;
            }
            Ok((total / 2000.0 / pop.optimal_risk() - 1.0).abs())
        })(),
    );
    suite.holds(
        "maml_finite_adaptation_risk",
        "adapted test loss of MAML (α = 0.5, Q = 1, N_a = 10⁴) within 3 standard errors of (1−α)²δ² + 1 + α²/N_a + 2α²δ²/N_a (witness: z-score)",
        maml_finite_adaptation(),
    );
    suite.holds(
        "bamaml_split_insensitivity",
        "spread over s ∈ {0.2,…,0.8} of the median total risk is smaller for BaMAML than MAML (T = 100, N = 10, 20 seeds; witness: MAML − BaMAML spread)",
        split_spreads().map(|(ma, ba)| (ba < ma, ma - ba)),
    );
}

/// Largest relative decomposition residual over `configs` random configurations.
pub fn decomposition_residual(configs: usize, seed: u64, fault: Option<Fault>) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for c in 0..configs {
        let mut rng = Rng::new(seed).derive(c as u64);
        let d = [1, 2, 5][c % 3];
        let method = [
            Method::erm(),
            Method::maml(0.3)?,
            Method::imaml(0.2)?,
            Method::bamaml(0.1)?,
        ][(c / 3) % 4];
        let pool = task_pool(d, 200, rng.derive(0).seed())?;
        let n = 10 + rng.index(10);
        let s = 0.5;
        let stats = sample_trial(&pool, 20, n, s, Noise::Gaussian, &mut rng)?;
        let pop = Population::new(method, &pool, realized_split(n, s)?)?;
        let hat = estimators::fit_theta0_from_stats(&method, &stats)?;
        let mut report = pop.report(hat);
        if fault == Some(Fault::FlipMamlWeightSign) && matches!(method, Method::Maml { .. }) {
            report.statistical_error = -report.statistical_error;
        }
        worst = worst.max(report.decomposition_residual());
    }
    Ok(worst)
}

fn maml_finite_adaptation() -> Result<(bool, f64)> {
    let (alpha, n_a, trials) = (0.5, 10_000usize, 1000usize);
    let task = TaskSpec::new(vec![1.0], SpdMatrix::identity(1))?;
    let m = Method::maml(alpha)?;
    let mut rng = Rng::new(403);
    let opts = AdaptedLossOptions::new(n_a, 100);
    let losses = (0..trials)
        .map(|_| adapted_test_loss(&m, &[0.0], &task, &mut rng, opts))
        .collect::<Result<Vec<f64>>>()?;
    let mean = losses.iter().sum::<f64>() / trials as f64;
    let var = losses.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
    let na = n_a as f64;
    let expected = (1.0 - alpha).powi(2) + 1.0 + alpha * alpha / na + 2.0 * alpha * alpha / na;
    let z = (mean - expected) / (var / trials as f64).sqrt();
    Ok((z.abs() < 3.0, z))
}

/// `(MAML spread, BaMAML spread)` of median total risk across split ratios.
pub fn split_spreads() -> Result<(f64, f64)> {
    let pool = task_pool(1, 10_000, 1)?;
    let methods = [Method::maml(0.7)?, Method::bamaml(0.1)?];
    let mut medians = [Vec::new(), Vec::new()];
    for (cell, s_nominal) in [0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8].into_iter().enumerate() {
        let s = realized_split(10, s_nominal)?;
        let pops = [Population::new(methods[0], &pool, s)?, Population::new(methods[1], &pool, s)?];
        let mut totals = [Vec::new(), Vec::new()];
        for rep in 0..20u64 {
            let mut rng = Rng::new(404).derive(cell as u64).derive(rep);
            let stats: Vec<TaskStats<f64>> = sample_trial(&pool, 100, 10, s_nominal, Noise::Gaussian, &mut rng)?;
            for k in 0..2 {
                let hat = estimators::fit_theta0_from_stats(&methods[k], &stats)?;
                totals[k].push(pops[k].risk(&hat));
            }
        }
        for k in 0..2 {
            medians[k].push(Summary::of(&totals[k]).median);
        }
    }
    let spread = |v: &[f64]| {
        v.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - v.iter().cloned().fold(f64::INFINITY, f64::min)
    };
    Ok((spread(&medians[0]), spread(&medians[1])))
}

fn constant_checks(suite: &mut Suite) {
    let record = |suite: &mut Suite, e: Result<ConstantEstimate>| -> Result<ConstantEstimate> {
        if let Ok(est) = &e {
            suite.estimates.push(*est);
        }
        e
    };

    for (i, &(d, n)) in [(2usize, 4usize), (20, 40)].iter().enumerate() {
        let est = record(
            suite,
            constants::isotropic_constant_mc(&Method::erm(), d, n, 0.5, &Rng::new(500 + i as u64), 100_000),
        );
        suite.holds(
            &format!("erm_constant_d{d}_n{n}"),
            &format!("ERM constant within 3σ of (d+N+1)/N = {} (witness: z-score)", constants::erm_constant_exact(d, n)),
            est.map(|e| {
                let z = (e.value - constants::erm_constant_exact(d, n)) / e.mc_std_error;
                (z.abs() < 3.0, z)
            }),
        );
    }

    let est = record(
        suite,
        constants::isotropic_constant_mc(&Method::Maml { alpha: 0.0 }, 3, 10, 0.5, &Rng::new(510), 20_000),
    );
    suite.holds(
        "maml_zero_step_constant",
        "MAML constant at α = 0 within 3σ of (d+N₂+1)/N₂ (witness: z-score)",
        est.map(|e| {
            let z = (e.value - constants::erm_constant_exact(3, 5)) / e.mc_std_error;
            (z.abs() < 3.0, z)
        }),
    );

    let est = record(
        suite,
        constants::isotropic_constant_mc(&Method::Bamaml { gamma: 1e-3 }, 20, 40, 0.5, &Rng::new(511), 10_000),
    );
    suite.holds(
        "bamaml_constant_at_least_one",
        "BaMAML constant (γ = 1e-3, d = 20, N = 40) is at least 1 (witness: value)",
        est.map(|e| (e.value >= 1.0, e.value)),
    );

    let mut previous = f64::INFINITY;
    let mut monotone = Ok((true, 0.0));
    for (i, d) in [10usize, 40, 160].into_iter().enumerate() {
        match record(
            suite,
            constants::isotropic_constant_mc(&Method::erm(), d, 2 * d, 0.5, &Rng::new(520 + i as u64), 2000),
        ) {
            Ok(e) => {
                let gap = (e.value - 1.5).abs();
                if let Ok((ok, _)) = monotone {
                    monotone = Ok((ok && gap < previous + 2.0 * e.mc_std_error, gap));
                }
                previous = gap;
            }
            Err(e) => monotone = Err(e),
        }
    }
    suite.holds(
        "erm_constant_converges",
        "|C̃₀^er − (1 + η)| shrinks over d ∈ {10, 40, 160} at η = 0.5 (witness: last gap)",
        monotone,
    );

    stieltjes_checks(suite);

    match constants::constant_ordering_check(40, 80, 2000, &ConstantGrids::for_n(80), &Rng::new(530)) {
        Ok(report) => {
            suite.estimates.extend(report.estimates.iter().copied());
            let (ma, ba) = (report.maml_min.value, report.bamaml_min.value);
            suite.holds(
                "maml_grid_min_band",
                "grid-minimal MAML constant at d = 40, N = 80 lies in [1.35, 1.65] (witness: value)",
                Ok(((1.35..=1.65).contains(&ma), ma)),
            );
            suite.holds(
                "bamaml_grid_min_band",
                "grid-minimal BaMAML constant at d = 40, N = 80 lies in [0.95, 1.25] (witness: value)",
                Ok(((0.95..=1.25).contains(&ba), ba)),
            );
            suite.holds(
                "strict_ordering",
                "grid-minimal MAML constant exceeds BaMAML's beyond combined 3σ (witness: gap)",
                Ok((report.is_strict(), ma - ba)),
            );
            suite.ordering = Some(report);
        }
        Err(e) => suite.holds("strict_ordering", "constant ordering at d = 40, N = 80", Err(e)),
    }

    let small_eta = constants::constant_ordering_check(2, 2000, 400, &ConstantGrids::for_n(2000), &Rng::new(531))
        .map(|r| {
            suite.estimates.extend(r.estimates.iter().copied());
            (r.maml_min.value - 1.0).abs().max((r.bamaml_min.value - 1.0).abs())
        });
    suite.bound(
        "small_eta_constants_near_one",
        "max |grid-min constant − 1| for MAML and BaMAML at d = 2, N = 2000",
        0.05,
        small_eta,
    );

    let violations: Vec<String> = suite
        .estimates
        .iter()
        .filter(|e| !e.satisfies_lower_bound())
        .map(|e| format!("{:?}", e.config))
        .collect();
    let worst = suite
        .estimates
        .iter()
        .map(|e| (1.0 - e.value) / e.mc_std_error.max(f64::MIN_POSITIVE))
        .fold(f64::NEG_INFINITY, f64::max);
    let detail = if violations.is_empty() {
        format!("all {} constant estimates satisfy value ≥ 1 − 3σ (witness: max (1 − value)/σ)", suite.estimates.len())
    } else {
        format!("violations: {}", violations.join("; "))
    };
    suite.bound("lower_bound", &detail, 3.0, Ok(worst));
}

/// Monte Carlo `(1/d)tr((ω₁I + ω₂Q̂)⁻¹)` and `(1/d)tr((ω₁I + ω₂Q̂)⁻²)` at `d = N`.
pub fn trace_moments_mc(d: usize, n: usize, omega1: f64, omega2: f64, samples: usize, seed: u64) -> Result<(f64, f64)> {
    let root = Rng::new(seed);
    let (mut first, mut second) = (0.0, 0.0);
    for k in 0..samples {
        let x: Matrix<f64> = standard_gaussian_matrix(&mut root.derive(k as u64), n, d);
        let q = x.gram().scale(omega2 / n as f64).add_diagonal(omega1);
        let inv = Cholesky::factor(&q)?.inverse();
        first += inv.trace() / d as f64;
        second += inv.frobenius_dot(&inv) / d as f64;
    }
    Ok((first / samples as f64, second / samples as f64))
}

fn stieltjes_checks(suite: &mut Suite) {
    for (i, &(w1, w2)) in [(1.0, 1.0), (1.0, 0.1), (2.0, 1.0)].iter().enumerate() {
        suite.bound(
            &format!("stieltjes_mc_w{w1}_{w2}"),
            &format!("|closed form − MC trace| at ω = ({w1}, {w2}), d = N = 400"),
            0.01,
            trace_moments_mc(400, 400, w1, w2, 2, 540 + i as u64)
                .map(|(mc, _)| (mc - constants::stieltjes(w1, w2, 1.0)).abs()),
        );
    }
    suite.bound(
        "stieltjes_large_gamma_limit",
        "|s(1, 1/γ) − 1| at γ = 1e6, η = 0.5",
        1e-5,
        Ok((constants::stieltjes(1.0, 1e-6, 0.5) - 1.0).abs()),
    );
    suite.bound(
        "stieltjes_small_gamma_limit",
        "|s(1, 1/γ) − (1 − 1/η)| at γ = 1e-8, η = 2",
        1e-5,
        Ok((constants::stieltjes(1.0, 1e8, 2.0) - 0.5).abs()),
    );
    let h = 1e-5;
    let fd = -(constants::stieltjes(1.0 + h, 1.0, 1.0) - constants::stieltjes(1.0 - h, 1.0, 1.0)) / (2.0 * h);
    let closed = constants::stieltjes_second_moment(1.0, 1.0, 1.0);
    suite.bound(
        "second_moment_finite_difference",
        "|derivative form − centered difference of s in ω₁| at γ = 1, η = 1",
        1e-3,
        Ok((fd - closed).abs()),
    );
    suite.bound(
        "second_moment_mc",
        "|derivative form − MC (1/d)tr((I + Q̂)⁻²)| at d = N = 400",
        0.01,
        trace_moments_mc(400, 400, 1.0, 1.0, 2, 540).map(|(_, mc)| (mc - closed).abs()),
    );
}
