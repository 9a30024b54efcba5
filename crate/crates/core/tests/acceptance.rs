//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::time::Instant;

use metalin::constants;
use metalin::estimators::{self, fit_theta0, Method};
use metalin::experiments::{self, task_pool, ExperimentConfig, LossMode, WinSetup};
use metalin::numerics::{self, standard_gaussian_matrix, Cholesky, Matrix, Rng};
use metalin::risk::{population_risk, statistical_error};
use metalin::taskgen::{sample_dataset, sample_task, Noise, TaskDataset, TaskDistribution};
use metalin::verify::{run_verify, Module, VerifyOptions, VerifyReport};

struct Outcome {
    passed: bool,
    summary: String,
}

fn outcome(passed: bool, summary: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        summary: summary.into(),
    }
}

fn all_methods() -> Vec<Method<f64>> {
    vec![
        Method::erm(),
        Method::maml(0.3).unwrap(),
        Method::imaml(0.2).unwrap(),
        Method::bamaml(0.1).unwrap(),
    ]
}

/// Total, optimal and statistical terms from separate code paths.
fn decomposition() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for (mi, method) in all_methods().iter().enumerate() {
        for d in [1usize, 2, 5] {
            for seed in 0..4u64 {
                count += 1;
                let key = seed * 100 + mi as u64 * 10 + d as u64;
                let pool = task_pool(d, 300, key).unwrap();
                let mut rng = Rng::new(key).derive(7);
                let datasets: Vec<TaskDataset<f64>> = (0..25)
                    .map(|_| {
                        let task = &pool[rng.index(pool.len())];
                        sample_dataset(&mut rng, task, 12, 0.5).unwrap()
                    })
                    .collect();
                let hat = fit_theta0(method, &datasets).unwrap();
                let star = estimators::optimal_theta0(method, &pool, 0.5).unwrap();
                let total = population_risk(method, &hat, &pool, 0.5);
                let optimal = population_risk(method, &star, &pool, 0.5);
                let stat = statistical_error(method, &hat, &star, &pool, 0.5);
                worst = worst.max((total - optimal - stat).abs() / total);
            }
        }
    }
    // 4 methods × 3 dimensions × 4 seeds covers 48; two more
    for seed in 10..12u64 {
        let method = Method::maml(0.8).unwrap();
        let pool = task_pool(2, 300, seed).unwrap();
        let mut rng = Rng::new(seed).derive(7);
        let datasets: Vec<TaskDataset<f64>> = (0..25)
            .map(|_| {
                let task = &pool[rng.index(pool.len())];
                sample_dataset(&mut rng, task, 12, 0.5).unwrap()
            })
            .collect();
        let hat = fit_theta0(&method, &datasets).unwrap();
        let star = estimators::optimal_theta0(&method, &pool, 0.5).unwrap();
        let total = population_risk(&method, &hat, &pool, 0.5);
        let optimal = population_risk(&method, &star, &pool, 0.5);
        let stat = statistical_error(&method, &hat, &star, &pool, 0.5);
        worst = worst.max((total - optimal - stat).abs() / total);
        count += 1;
    }
    outcome(
        worst < 1e-8,
        format!("{count} configurations, max relative residual {worst:.2e} (< 1e-8)"),
    )
}

/// Empirical meta loss written out from the learner definitions.
fn oracle_loss(method: &Method<f64>, theta0: &[f64], datasets: &[TaskDataset<f64>]) -> f64 {
    let mse = |x: &Matrix<f64>, y: &[f64], theta: &[f64]| {
        let pred = x.mat_vec(theta);
        y.iter().zip(&pred).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / y.len() as f64
    };
    let mut total = 0.0;
    for ds in datasets {
        let n1 = ds.n_trn() as f64;
        total += match *method {
            Method::Erm => mse(&ds.x_all(), &ds.y_all(), theta0),
            Method::Maml { alpha } => {
                // θ₀ − (α/2)·∇(1/N₁)‖y − Xθ‖², with ∇ = (2/N₁)Xᵀ(Xθ − y)
                let resid: Vec<f64> = ds
                    .x_trn
                    .mat_vec(theta0)
                    .iter()
                    .zip(&ds.y_trn)
                    .map(|(p, y)| p - y)
                    .collect();
                let grad = numerics::scale(&ds.x_trn.tr_mat_vec(&resid), 2.0 / n1);
                let theta = numerics::sub(theta0, &numerics::scale(&grad, alpha / 2.0));
                mse(&ds.x_val, &ds.y_val, &theta)
            }
            Method::Imaml { gamma } => {
                // argmin (1/N₁)‖y − Xθ‖² + γ‖θ − θ₀‖²
                let system = ds.x_trn.gram().scale(1.0 / n1).add_diagonal(gamma);
                let rhs = numerics::add(
                    &numerics::scale(&ds.x_trn.tr_mat_vec(&ds.y_trn), 1.0 / n1),
                    &numerics::scale(theta0, gamma),
                );
                let theta = Cholesky::factor(&system).unwrap().solve_vec(&rhs);
                mse(&ds.x_val, &ds.y_val, &theta)
            }
            Method::Bamaml { gamma } => {
                // −(1/N₂)·log p(y_val | y_trn) under θ ~ N(θ₀, I/(γN₁)), unit noise
                let gb = gamma * n1;
                let log_marginal = |x: &Matrix<f64>, y: &[f64]| {
                    let cov = x.matmul(&x.transpose()).scale(1.0 / gb).add_diagonal(1.0);
                    let chol = Cholesky::factor(&cov).unwrap();
                    let r = numerics::sub(y, &x.mat_vec(theta0));
                    let quad = numerics::dot(&r, &chol.solve_vec(&r));
                    -0.5 * (quad + chol.log_det() + y.len() as f64 * std::f64::consts::TAU.ln())
                };
                let all = log_marginal(&ds.x_all(), &ds.y_all());
                let trn = log_marginal(&ds.x_trn, &ds.y_trn);
                -(all - trn) / ds.n_val() as f64
            }
        };
    }
    total / datasets.len() as f64
}

/// Barzilai–Borwein gradient descent on the oracle loss with central differences.
fn minimize(method: &Method<f64>, datasets: &[TaskDataset<f64>], d: usize) -> Vec<f64> {
    let h = 1e-4;
    let grad = |theta: &[f64]| -> Vec<f64> {
        (0..d)
            .map(|j| {
                let mut p = theta.to_vec();
                let mut m = theta.to_vec();
                p[j] += h;
                m[j] -= h;
                (oracle_loss(method, &p, datasets) - oracle_loss(method, &m, datasets)) / (2.0 * h)
            })
            .collect()
    };
    let mut theta = vec![0.0; d];
    let mut g = grad(&theta);
    let mut step = 1e-2;
    for _ in 0..20_000 {
        if numerics::max_abs(&g) < 1e-12 {
            break;
        }
        let next = numerics::sub(&theta, &numerics::scale(&g, step));
        let g_next = grad(&next);
        let s = numerics::sub(&next, &theta);
        let y = numerics::sub(&g_next, &g);
        let sy = numerics::dot(&s, &y);
        if sy > 0.0 {
            step = numerics::dot(&s, &s) / sy;
        }
        theta = next;
        g = g_next;
    }
    theta
}

fn closed_form_vs_iterative() -> Outcome {
    let mut worst: f64 = 0.0;
    let methods = [
        Method::erm(),
        Method::maml(0.3).unwrap(),
        Method::imaml(0.5).unwrap(),
        Method::bamaml(0.5).unwrap(),
    ];
    for i in 0..20u64 {
        let method = methods[(i % 4) as usize];
        let mut rng = Rng::new(1000 + i);
        let d = 1 + (i as usize % 3);
        let t = 4 + rng.index(7);
        let n = 8 + rng.index(9);
        let dist = TaskDistribution::<f64>::general(&mut rng, d).unwrap();
        let datasets: Vec<TaskDataset<f64>> = (0..t)
            .map(|_| {
                let task = sample_task(&mut rng, &dist).unwrap();
                sample_dataset(&mut rng, &task, n, 0.5).unwrap()
            })
            .collect();
        let closed = fit_theta0(&method, &datasets).unwrap();
        let iterative = minimize(&method, &datasets, d);
        worst = worst.max(numerics::max_abs(&numerics::sub(&closed, &iterative)));
    }
    outcome(worst < 1e-6, format!("20 instances, max |θ̂₀ − iterative| = {worst:.2e} (< 1e-6)"))
}

fn posterior_ridge() -> Outcome {
    let mut worst: f64 = 0.0;
    for i in 0..100u64 {
        let mut rng = Rng::new(2000 + i);
        let d = 1 + rng.index(5);
        let n = 1 + rng.index(15);
        let gamma = 10f64.powf(rng.uniform(-2.0, 1.0));
        let x: Matrix<f64> = standard_gaussian_matrix(&mut rng, n, d);
        let y: Vec<f64> = (0..n).map(|_| rng.standard_normal()).collect();
        let theta0: Vec<f64> = (0..d).map(|_| rng.uniform(0.0, 2.0)).collect();
        let post = estimators::bamaml_posterior(&theta0, &x, &y, gamma * n as f64).unwrap();
        let ridge = estimators::adapt(&Method::imaml(gamma).unwrap(), &theta0, &x, &y).unwrap();
        worst = worst.max(numerics::max_abs(&numerics::sub(&post.mean, &ridge)));
    }
    outcome(worst < 1e-12, format!("100 instances, max gap {worst:.2e} (< 1e-12)"))
}

fn erm_constant() -> Outcome {
    let mut parts = Vec::new();
    let mut passed = true;
    for (i, (d, n)) in [(2usize, 4usize), (20, 40)].into_iter().enumerate() {
        let est = constants::isotropic_constant_mc(&Method::erm(), d, n, 0.5, &Rng::new(3000 + i as u64), 100_000)
            .unwrap();
        let exact = (d + n + 1) as f64 / n as f64;
        let z = (est.value - exact) / est.mc_std_error;
        passed &= z.abs() <= 3.0;
        parts.push(format!("d={d},N={n}: {:.4} ± {:.4} vs {exact} (z = {z:.2})", est.value, est.mc_std_error));
    }
    outcome(passed, parts.join("; "))
}

fn asymptotic_constants(report: &VerifyReport) -> Outcome {
    let Some(o) = &report.ordering else {
        return outcome(false, "ordering check did not run");
    };
    let (ma, ba) = (o.maml_min, o.bamaml_min);
    let passed = (1.35..=1.65).contains(&ma.value)
        && (0.95..=1.25).contains(&ba.value)
        && constants::strictly_greater(&ma, &ba);
    outcome(
        passed,
        format!(
            "d=40, N=80: MAML min {:.4} ± {:.4} (α={:?}, s={}), BaMAML min {:.4} ± {:.4} (γ={:?}, s={}), targets {} / {}",
            ma.value,
            ma.mc_std_error,
            ma.config.hyperparameter.unwrap_or(f64::NAN),
            ma.config.s,
            ba.value,
            ba.mc_std_error,
            ba.config.hyperparameter.unwrap_or(f64::NAN),
            ba.config.s,
            o.maml_target.value,
            o.bamaml_target.value
        ),
    )
}

fn stieltjes() -> Outcome {
    let (d, n) = (400usize, 400usize);
    let mut worst_mc: f64 = 0.0;
    for (k, (w1, w2)) in [(1.0, 1.0), (1.0, 0.1), (2.0, 1.0)].into_iter().enumerate() {
        let mut rng = Rng::new(4000 + k as u64);
        let x: Matrix<f64> = standard_gaussian_matrix(&mut rng, n, d);
        let a = x.gram().scale(w2 / n as f64).add_diagonal(w1);
        let mc = Cholesky::factor(&a).unwrap().inverse().trace() / d as f64;
        worst_mc = worst_mc.max((mc - constants::stieltjes(w1, w2, 1.0)).abs());
    }
    let lim_large = (constants::stieltjes(1.0, 1e-6, 0.5) - 1.0).abs();
    let lim_small = (constants::stieltjes(1.0, 1e8, 2.0) - 0.5).abs();
    outcome(
        worst_mc < 0.01 && lim_large < 1e-5 && lim_small < 1e-5,
        format!("max MC gap {worst_mc:.2e} (< 0.01); limits {lim_large:.2e}, {lim_small:.2e} (< 1e-5)"),
    )
}

fn win_probability() -> Outcome {
    let pool = task_pool(1, 10_000, 0).unwrap();
    let setup = WinSetup {
        t: 10_000,
        n: 1000,
        s: 0.5,
        repetitions: 100,
        noise: Noise::Gaussian,
        mode: LossMode::ClosedForm,
        eval_tasks: 0,
        n_test: 0,
    };
    let frac = experiments::win_fraction(
        &Method::bamaml(0.1).unwrap(),
        &Method::maml(0.7).unwrap(),
        &pool,
        &setup,
        0,
        0,
    )
    .unwrap();
    outcome(frac > 0.5, format!("BaMAML win fraction {frac} over 100 trials (> 0.5)"))
}

fn gamma_limits() -> Outcome {
    let pool = task_pool(1, 10_000, 0).unwrap();
    let optimal = |m: Method<f64>| {
        let star = estimators::optimal_theta0(&m, &pool, 0.5).unwrap();
        population_risk(&m, &star, &pool, 0.5)
    };
    let small = optimal(Method::bamaml(1e-6).unwrap()) - 1.0;
    let large = (optimal(Method::bamaml(1e6).unwrap()) - optimal(Method::erm())).abs();
    outcome(
        small.abs() < 1e-3 && large < 1e-3,
        format!("|R(γ=1e-6) − 1| = {:.2e}, |R(γ=1e6) − R_erm| = {large:.2e} (< 1e-3)", small.abs()),
    )
}

fn decay() -> Outcome {
    let cfg = ExperimentConfig {
        d: 1,
        n: 100,
        log_t_grid: Some(vec![2.0, 3.0, 4.0]),
        log_n_grid: Some(vec![]),
        repetitions: 20,
        ..Default::default()
    };
    let rows = experiments::run_decay(&cfg).unwrap();
    let slopes: Vec<(String, f64)> = rows
        .iter()
        .filter(|r| r.metric == "slope_vs_T")
        .map(|r| (r.method.clone(), r.value))
        .collect();
    let passed = slopes.len() == 4 && slopes.iter().all(|(_, s)| (s + 1.0).abs() <= 0.15);
    let text: Vec<String> = slopes.iter().map(|(m, s)| format!("{m} {s:.3}")).collect();
    outcome(passed, format!("slopes {} (target −1 ± 0.15)", text.join(", ")))
}

fn lower_bound(report: &VerifyReport) -> Outcome {
    let bad = report
        .constant_estimates
        .iter()
        .filter(|e| !e.satisfies_lower_bound())
        .count();
    let lowest = report
        .constant_estimates
        .iter()
        .map(|e| e.value)
        .fold(f64::INFINITY, f64::min);
    outcome(
        bad == 0 && !report.constant_estimates.is_empty(),
        format!(
            "{} estimates, {bad} below 1 − 3σ, smallest value {lowest:.4}",
            report.constant_estimates.len()
        ),
    )
}

fn main() {
    // `cargo test` passes harness flags such as `--quiet`; listing must stay silent.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let mut failures = 0;
    let mut run = |id: u32, name: &str, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let o = f();
        let status = if o.passed { "PASS" } else { "FAIL" };
        println!(
            "criterion {id:>2} {status} {name}: {} [{:.1}s]",
            o.summary,
            start.elapsed().as_secs_f64()
        );
        if !o.passed {
            failures += 1;
        }
    };
    run(1, "risk decomposition identity", &mut decomposition);
    run(2, "closed-form vs iterative meta solvers", &mut closed_form_vs_iterative);
    run(3, "posterior mean equals ridge adaptation", &mut posterior_ridge);
    run(4, "ERM dominating constant", &mut erm_constant);
    // criteria 5 and 10 share one run of the constants suite
    let start = Instant::now();
    let report = run_verify(VerifyOptions {
        subset: Some(Module::Constants),
        fault: None,
    });
    println!("constants suite ran in {:.1}s", start.elapsed().as_secs_f64());
    run(5, "MAML and BaMAML constants and ordering", &mut || asymptotic_constants(&report));
    run(6, "Stieltjes transform self-consistency", &mut stieltjes);
    run(7, "BaMAML win probability cell", &mut win_probability);
    run(8, "BaMAML gamma limits", &mut gamma_limits);
    run(9, "statistical error decay in T", &mut decay);
    run(10, "constant lower bound", &mut || lower_bound(&report));
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
