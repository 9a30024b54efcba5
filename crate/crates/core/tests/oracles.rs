//! Library results checked against values computed independently here.

use metalin::constants;
use metalin::estimators::{self, empirical_loss, fit_theta0, Method};
use metalin::experiments::{self, task_pool, ExperimentConfig};
use metalin::numerics::{self, standard_gaussian_matrix, Matrix, Rng, SpdMatrix};
use metalin::risk::Population;
use metalin::taskgen::{sample_dataset, sample_task, TaskDataset, TaskDistribution};

fn datasets(seed: u64, d: usize, t: usize, n: usize) -> Vec<TaskDataset<f64>> {
    let mut rng = Rng::new(seed);
    let dist = TaskDistribution::<f64>::general(&mut rng, d).unwrap();
    (0..t)
        .map(|_| {
            let task = sample_task(&mut rng, &dist).unwrap();
            sample_dataset(&mut rng, &task, n, 0.5).unwrap()
        })
        .collect()
}

#[test]
fn fitted_initialization_minimizes_empirical_loss() {
    let methods = [
        Method::erm(),
        Method::maml(0.2).unwrap(),
        Method::imaml(1.0).unwrap(),
        Method::bamaml(1.0).unwrap(),
    ];
    for (i, method) in methods.iter().enumerate() {
        let data = datasets(10 + i as u64, 3, 8, 14);
        let hat = fit_theta0(method, &data).unwrap();
        let base = empirical_loss(method, &hat, &data).unwrap();
        for j in 0..3 {
            for h in [1e-3, -1e-3] {
                let mut moved = hat.clone();
                moved[j] += h;
                let loss = empirical_loss(method, &moved, &data).unwrap();
                assert!(loss >= base - 1e-12, "{method}: {loss} < {base}");
            }
        }
    }
}

#[test]
fn erm_matches_pooled_least_squares() {
    let data = datasets(3, 2, 6, 10);
    // normal equations over the pooled design, solved by Cramer's rule
    let (mut a, mut b) = ([[0.0; 2]; 2], [0.0; 2]);
    for ds in &data {
        let x = ds.x_all();
        let y = ds.y_all();
        for (i, yi) in y.iter().enumerate() {
            let row = x.row(i);
            for r in 0..2 {
                b[r] += row[r] * yi;
                for c in 0..2 {
                    a[r][c] += row[r] * row[c];
                }
            }
        }
    }
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let expected = [
        (b[0] * a[1][1] - a[0][1] * b[1]) / det,
        (a[0][0] * b[1] - a[1][0] * b[0]) / det,
    ];
    let hat = fit_theta0(&Method::erm(), &data).unwrap();
    for k in 0..2 {
        assert!((hat[k] - expected[k]).abs() < 1e-12);
    }
}

#[test]
fn scalar_population_weights() {
    let q: f64 = 1.7;
    let s = 0.3;
    let spd = SpdMatrix::new(Matrix::from_diagonal(&[q])).unwrap();
    let cases = [
        (Method::erm(), q),
        (Method::maml(0.4).unwrap(), (1.0 - 0.4 * q) * (1.0 - 0.4 * q) * q),
        (Method::imaml(0.5).unwrap(), q / ((q / 0.5 + 1.0) * (q / 0.5 + 1.0))),
        (Method::bamaml(0.5).unwrap(), q / ((q / (s * 0.5) + 1.0) * (q / 0.5 + 1.0))),
    ];
    for (method, expected) in cases {
        let w = estimators::population_weight(&method, &spd, s);
        assert!((w[(0, 0)] - expected).abs() < 1e-14, "{method}");
    }
}

#[test]
fn scalar_optimal_initialization_is_weighted_mean() {
    let pool = task_pool(1, 50, 8).unwrap();
    let method = Method::imaml(0.3).unwrap();
    let (mut num, mut den) = (0.0, 0.0);
    for task in &pool {
        let q = task.q.matrix()[(0, 0)];
        let w = q / ((q / 0.3 + 1.0) * (q / 0.3 + 1.0));
        num += w * task.theta_gt[0];
        den += w;
    }
    let star = estimators::optimal_theta0(&method, &pool, 0.5).unwrap();
    assert!((star[0] - num / den).abs() < 1e-13);
}

#[test]
fn population_risk_matches_monte_carlo_adaptation() {
    // closed-form risk of MAML against adapting on freshly sampled data
    let pool = task_pool(2, 20, 5).unwrap();
    let method = Method::maml(0.3).unwrap();
    let pop = Population::new(method, &pool, 0.5).unwrap();
    let theta0 = vec![1.0, 0.5];
    let mut rng = Rng::new(77);
    let trials = 40_000;
    let mut total = 0.0;
    for _ in 0..trials {
        let task = &pool[rng.index(pool.len())];
        let ds = sample_dataset(&mut rng, task, 12, 0.5).unwrap();
        let adapted = estimators::adapt(&method, &theta0, &ds.x_trn, &ds.y_trn).unwrap();
        let x: Matrix<f64> = numerics::gaussian_matrix(&mut rng, 1, 2, &task.q).unwrap();
        let y = numerics::dot(x.row(0), &task.theta_gt) + rng.standard_normal();
        let r = y - numerics::dot(x.row(0), &adapted);
        total += r * r;
    }
    let mc = total / trials as f64;
    // the population weight uses the expected Gram matrix, so the adapted
    // risk exceeds it by a finite-sample term of order α²/N₁
    let closed = pop.risk(&theta0);
    assert!((mc - closed).abs() / closed < 0.1, "mc {mc} closed {closed}");
}

#[test]
fn stieltjes_matches_trace_of_resolvent() {
    let mut rng = Rng::new(9);
    let (d, n) = (300, 600);
    let x: Matrix<f64> = standard_gaussian_matrix(&mut rng, n, d);
    let a = x.gram().scale(0.5 / n as f64).add_diagonal(1.0);
    let mc = numerics::Cholesky::factor(&a).unwrap().inverse().trace() / d as f64;
    let theory = constants::stieltjes(1.0, 0.5, d as f64 / n as f64);
    assert!((mc - theory).abs() < 0.01, "{mc} vs {theory}");
}

#[test]
fn erm_constant_is_exact_formula() {
    for (d, n) in [(1, 2), (5, 10), (20, 40)] {
        let exact = constants::erm_constant_exact(d, n);
        assert!((exact - (d + n + 1) as f64 / n as f64).abs() < 1e-15);
    }
}

#[test]
fn decay_slope_averages_to_minus_one() {
    // one seed's slope has a spread near 0.2; 32 seeds shrink the mean's to about 0.035
    let cfg = ExperimentConfig {
        d: 1,
        n: 100,
        log_t_grid: Some(vec![2.0, 3.0, 4.0]),
        log_n_grid: Some(vec![]),
        repetitions: 20,
        seeds: (100..132).collect(),
        ..Default::default()
    };
    let rows = experiments::run_decay(&cfg).unwrap();
    for method in ["erm", "maml", "imaml", "bamaml"] {
        let slopes: Vec<f64> = rows
            .iter()
            .filter(|r| r.metric == "slope_vs_T" && r.method == method)
            .map(|r| r.value)
            .collect();
        assert_eq!(slopes.len(), 32);
        let mean = slopes.iter().sum::<f64>() / slopes.len() as f64;
        assert!((mean + 1.0).abs() < 0.15, "{method}: mean slope {mean}");
    }
}

#[test]
fn single_precision_agrees_with_double() {
    let data = datasets(21, 2, 10, 12);
    let data32: Vec<TaskDataset<f32>> = data
        .iter()
        .map(|ds| {
            let cast = |v: &[f64]| v.iter().map(|&x| x as f32).collect::<Vec<_>>();
            TaskDataset::new(ds.x_trn.cast(), cast(&ds.y_trn), ds.x_val.cast(), cast(&ds.y_val)).unwrap()
        })
        .collect();
    let method = Method::imaml(0.5).unwrap();
    let hat64 = fit_theta0(&method, &data).unwrap();
    let hat32 = fit_theta0(&Method::<f32>::imaml(0.5).unwrap(), &data32).unwrap();
    for (a, b) in hat64.iter().zip(&hat32) {
        assert!((a - *b as f64).abs() < 1e-3);
    }
}
