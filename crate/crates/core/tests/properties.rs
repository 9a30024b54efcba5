use metalin::estimators::{self, Method, TaskStats};
use metalin::numerics::{self, standard_gaussian_matrix, Matrix, Rng};
use metalin::taskgen::split_sizes;
use proptest::prelude::*;

proptest! {
    #[test]
    fn split_sizes_partition(n in 2usize..500, s in 0.01f64..0.99) {
        if let Ok((n1, n2)) = split_sizes(n, s) {
            prop_assert_eq!(n1 + n2, n);
            prop_assert!(n1 >= 1 && n2 >= 1);
            prop_assert!((n1 as f64 - s * n as f64).abs() <= 0.5 + 1e-9);
        }
    }

    #[test]
    fn posterior_mean_is_ridge(seed in any::<u64>(), d in 1usize..5, n in 1usize..12, log_g in -2.0f64..2.0) {
        let mut rng = Rng::new(seed);
        let gamma = 10f64.powf(log_g);
        let x: Matrix<f64> = standard_gaussian_matrix(&mut rng, n, d);
        let y: Vec<f64> = (0..n).map(|_| rng.standard_normal()).collect();
        let theta0: Vec<f64> = (0..d).map(|_| rng.uniform(0.0, 2.0)).collect();
        let post = estimators::bamaml_posterior(&theta0, &x, &y, gamma * n as f64).unwrap();
        let ridge = estimators::adapt(&Method::imaml(gamma).unwrap(), &theta0, &x, &y).unwrap();
        prop_assert!(numerics::max_abs(&numerics::sub(&post.mean, &ridge)) < 1e-10);
    }

    #[test]
    fn maml_step_matches_gradient(seed in any::<u64>(), d in 1usize..5, n in 1usize..12, alpha in 0.0f64..2.0) {
        let mut rng = Rng::new(seed);
        let x: Matrix<f64> = standard_gaussian_matrix(&mut rng, n, d);
        let y: Vec<f64> = (0..n).map(|_| rng.standard_normal()).collect();
        let theta0: Vec<f64> = (0..d).map(|_| rng.standard_normal()).collect();
        let resid = numerics::sub(&x.mat_vec(&theta0), &y);
        let grad = numerics::scale(&x.tr_mat_vec(&resid), 1.0 / n as f64);
        let expected = numerics::sub(&theta0, &numerics::scale(&grad, alpha));
        let got = estimators::adapt(&Method::maml(alpha).unwrap(), &theta0, &x, &y).unwrap();
        prop_assert!(numerics::max_abs(&numerics::sub(&got, &expected)) < 1e-10);
    }

    #[test]
    fn empirical_weights_are_symmetric_psd(seed in any::<u64>(), d in 1usize..5, n1 in 1usize..10, n2 in 1usize..10, h in 0.01f64..5.0, kind in 0usize..4) {
        let mut rng = Rng::new(seed);
        let xt: Matrix<f64> = standard_gaussian_matrix(&mut rng, n1, d);
        let xv: Matrix<f64> = standard_gaussian_matrix(&mut rng, n2, d);
        let stats = TaskStats::from_features(&xt, &xv);
        let method = match kind {
            0 => Method::erm(),
            1 => Method::maml(h).unwrap(),
            2 => Method::imaml(h).unwrap(),
            _ => Method::bamaml(h).unwrap(),
        };
        let w = estimators::stats_weight(&method, &stats);
        prop_assert!(w.asymmetry() < 1e-12 * (1.0 + w.max_abs()));
        for _ in 0..5 {
            let v: Vec<f64> = (0..d).map(|_| rng.standard_normal()).collect();
            prop_assert!(w.quadratic_form(&v) >= -1e-10 * (1.0 + w.max_abs()));
        }
    }
}
