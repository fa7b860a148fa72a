use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{Continuous, ContinuousCDF, Normal, StudentsT};

use omit_core::regression::special::{std_normal_cdf, std_normal_quantile, student_t_quantile};
use omit_core::regression::{fit_ols, fit_probit_matrix};
use omit_core::{load_csv, write_csv, ColumnSchema, ObservationTable};

#[test]
fn ols_matches_normal_equations() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (n, p) = (150, 5);
    let x = DMatrix::from_fn(n, p, |_, j| if j == 0 { 1.0 } else { rng.sample(StandardNormal) });
    let y: Vec<f64> = (0..n)
        .map(|i| 1.0 + 2.0 * x[(i, 1)] - x[(i, 3)] + rng.sample::<f64, _>(StandardNormal))
        .collect();
    let fit = fit_ols(&x, &y).unwrap();
    let xty = x.transpose() * DMatrix::from_column_slice(n, 1, &y);
    let beta = (x.transpose() * &x).lu().solve(&xty).unwrap();
    for j in 0..p {
        assert!((fit.coef[j] - beta[(j, 0)]).abs() < 1e-10, "{j}");
    }
    let rss: f64 = fit.residuals.iter().map(|r| r * r).sum();
    assert!((fit.sigma - (rss / (n - p) as f64).sqrt()).abs() < 1e-12);
}

#[test]
fn probit_score_vanishes_at_the_fit() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let n = 400;
    let x = DMatrix::from_fn(n, 2, |_, _| rng.sample(StandardNormal));
    let norm = Normal::standard();
    let t: Vec<bool> = (0..n)
        .map(|i| rng.random::<f64>() < norm.cdf(-0.3 + 0.8 * x[(i, 0)] - 0.5 * x[(i, 1)]))
        .collect();
    let fit = fit_probit_matrix(&x, &t).unwrap();
    assert!(fit.converged);
    // score of the probit log-likelihood, computed with an independent cdf
    let mut score = [0.0; 3];
    for i in 0..n {
        let eta = fit.coef[0] + fit.coef[1] * x[(i, 0)] + fit.coef[2] * x[(i, 1)];
        let (pdf, cdf) = (norm.pdf(eta), norm.cdf(eta));
        let g = if t[i] { pdf / cdf } else { -pdf / (1.0 - cdf) };
        for (k, v) in [1.0, x[(i, 0)], x[(i, 1)]].iter().enumerate() {
            score[k] += g * v;
        }
    }
    assert!(score.iter().all(|s| s.abs() < 1e-6), "{score:?}");
}

#[test]
fn special_functions_agree_with_statrs() {
    let norm = Normal::standard();
    for z in [-8.0, -3.0, -1.0, -0.2, 0.0, 0.7, 2.5, 6.0] {
        let (a, b) = (std_normal_cdf(z), norm.cdf(z));
        assert!((a - b).abs() <= 1e-10 * b.max(1e-300) + 1e-15, "{z}");
    }
    for p in [1e-8, 0.01, 0.3, 0.5, 0.9, 0.975, 1.0 - 1e-9] {
        assert!((std_normal_quantile(p).unwrap() - norm.inverse_cdf(p)).abs() < 1e-8, "{p}");
    }
    for nu in [1.0, 16.0 / 9.0, 4.0, 30.5, 400.0] {
        let t = StudentsT::new(0.0, 1.0, nu).unwrap();
        for p in [0.025, 0.5, 0.9, 0.975] {
            let want = t.inverse_cdf(p);
            assert!((student_t_quantile(p, nu).unwrap() - want).abs() < 1e-7 * (1.0 + want.abs()), "{nu} {p}");
        }
    }
}

#[test]
fn csv_round_trip_preserves_values_and_missingness() {
    let x = DMatrix::from_row_slice(3, 2, &[0.1, 1.0, -2.5, 0.0, 1e-17, 1.0]);
    let table = ObservationTable::new(
        vec!["a".into(), "b".into()],
        x,
        vec![1.0 / 3.0, -7.25, 1e10],
        vec![Some(true), None, Some(false)],
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    write_csv(&table, &path).unwrap();
    let schema = ColumnSchema {
        outcome: "y".into(),
        treatment: "t".into(),
        covariates: vec!["a".into(), "b".into()],
    };
    let back = load_csv(&path, &schema).unwrap();
    assert_eq!(back.y(), table.y());
    assert_eq!(back.t(), table.t());
    assert_eq!(back.x(), table.x());
}
