use mlnetreg::linalg::least_squares;
use mlnetreg::regression::{added_variable_f_test, fit_ccmnetr, fit_cmnetr, fit_covariates_only, standardize, vif};
use mlnetreg::DenseMatrix;
use proptest::prelude::*;
use testkit::{gram_inverse_diag, max_relative_diff, normal_equations, SplitMix};

fn random_design(rng: &mut SplitMix, n: usize, q: usize) -> (testkit::Mat, Vec<f64>) {
    let w: testkit::Mat = (0..n).map(|_| (0..q).map(|_| rng.normal()).collect()).collect();
    let y = (0..n).map(|_| rng.normal()).collect();
    (w, y)
}

#[test]
fn least_squares_matches_normal_equations() {
    for seed in 0..60 {
        let mut rng = SplitMix::new(seed);
        let n = rng.below(5, 21);
        let q = rng.below(1, n.min(8));
        let (w, y) = random_design(&mut rng, n, q);
        let fit = least_squares(&DenseMatrix::from_rows(&w).unwrap(), &y).unwrap();
        assert!(max_relative_diff(&fit.coefficients, &normal_equations(&w, &y)) < 1e-9, "seed {seed}");
        assert!(max_relative_diff(&fit.xtx_inverse_diag, &gram_inverse_diag(&w)) < 1e-9);
        let rss: f64 = fit.residuals.iter().map(|r| r * r).sum();
        assert!((rss - fit.rss).abs() < 1e-12 * rss.max(1.0));
        assert!((fit.sigma2_hat - fit.rss / (n - q) as f64).abs() < 1e-15 * fit.rss.max(1.0));
    }
}

#[test]
fn model_fits_concatenate_columns() {
    let mut rng = SplitMix::new(5);
    let (x, y) = random_design(&mut rng, 15, 2);
    let c: testkit::Mat = (0..15).map(|_| vec![rng.uniform(), rng.uniform()]).collect();
    let z: Vec<f64> = (0..15).map(|_| rng.uniform()).collect();
    let xd = DenseMatrix::from_rows(&x).unwrap();
    let w1: testkit::Mat = x.iter().zip(&c).map(|(a, b)| a.iter().chain(b).copied().collect()).collect();
    let fit = fit_cmnetr(&xd, &DenseMatrix::from_rows(&c).unwrap(), &y).unwrap();
    assert!(max_relative_diff(&fit.coefficients(), &normal_equations(&w1, &y)) < 1e-9);
    let w2: testkit::Mat = x.iter().zip(&z).map(|(a, b)| a.iter().copied().chain([*b]).collect()).collect();
    let fit = fit_ccmnetr(&xd, &z, &y, 0.5).unwrap();
    let oracle = normal_equations(&w2, &y);
    assert!(max_relative_diff(&fit.coefficients(), &oracle) < 1e-9);
    let ztz: f64 = z.iter().map(|v| v * v).sum();
    let expected = (ztz / fit.sigma2_hat).sqrt() * (oracle[2] - 0.5);
    assert!((fit.z_stat_z.unwrap() - expected).abs() < 1e-9 * expected.abs().max(1.0));
}

#[test]
fn f_test_arithmetic() {
    let mut rng = SplitMix::new(11);
    let (x, y) = random_design(&mut rng, 20, 3);
    let xd = DenseMatrix::from_rows(&x).unwrap();
    let z: Vec<f64> = (0..20).map(|_| rng.normal()).collect();
    let reduced = fit_covariates_only(&xd, &y).unwrap();
    let full = fit_ccmnetr(&xd, &z, &y, 0.0).unwrap();
    let f = added_variable_f_test(&reduced, &full).unwrap();
    assert_eq!(f.df, (1, 16));
    let expected = (reduced.rss - full.rss) / (full.rss / 16.0);
    assert!((f.f_stat - expected).abs() < 1e-12 * expected.max(1.0));
    assert!((0.0..=1.0).contains(&f.p_value));
}

#[test]
fn two_predictor_vif_closed_form() {
    for seed in 0..20 {
        let mut rng = SplitMix::new(seed);
        let rho = rng.range(-0.95, 0.95);
        let a: Vec<f64> = (0..50).map(|_| rng.normal()).collect();
        let b: Vec<f64> = a.iter().map(|v| rho * v + rng.normal()).collect();
        let r = mlnetreg::stats::pearson(&a, &b);
        let v = vif(&DenseMatrix::from_columns(&[&a, &b]).unwrap()).unwrap();
        let expected = 1.0 / (1.0 - r * r);
        assert!((v[0] - expected).abs() < 1e-10 * expected && (v[1] - expected).abs() < 1e-10 * expected);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn residuals_are_orthogonal(seed in 0u64..10_000) {
        let mut rng = SplitMix::new(seed);
        let n = rng.below(6, 40);
        let q = rng.below(1, 5);
        let (w, y) = random_design(&mut rng, n, q);
        let fit = least_squares(&DenseMatrix::from_rows(&w).unwrap(), &y).unwrap();
        let ynorm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        for j in 0..q {
            let dot: f64 = (0..n).map(|i| w[i][j] * fit.residuals[i]).sum();
            prop_assert!(dot.abs() <= 1e-8 * ynorm);
        }
    }

    #[test]
    fn row_order_does_not_matter(seed in 0u64..10_000) {
        let mut rng = SplitMix::new(seed);
        let (w, y) = random_design(&mut rng, 12, 3);
        let perm: Vec<usize> = (0..12).rev().collect();
        let pw: testkit::Mat = perm.iter().map(|&i| w[i].clone()).collect();
        let py: Vec<f64> = perm.iter().map(|&i| y[i]).collect();
        let a = least_squares(&DenseMatrix::from_rows(&w).unwrap(), &y).unwrap();
        let b = least_squares(&DenseMatrix::from_rows(&pw).unwrap(), &py).unwrap();
        prop_assert!(max_relative_diff(&a.coefficients, &b.coefficients) < 1e-10);
    }

    #[test]
    fn adding_a_column_never_raises_rss(seed in 0u64..10_000) {
        let mut rng = SplitMix::new(seed);
        let (x, y) = random_design(&mut rng, 15, 2);
        let z: Vec<f64> = (0..15).map(|_| rng.normal()).collect();
        let xd = DenseMatrix::from_rows(&x).unwrap();
        let reduced = fit_covariates_only(&xd, &y).unwrap();
        let full = fit_ccmnetr(&xd, &z, &y, 0.0).unwrap();
        prop_assert!(full.rss <= reduced.rss * (1.0 + 1e-12));
    }

    #[test]
    fn standardized_columns_have_unit_moments(seed in 0u64..10_000) {
        let mut rng = SplitMix::new(seed);
        let m = DenseMatrix::from_fn(10, 3, |_, j| rng.range(-5.0, 5.0) * (j + 1) as f64 + 7.0);
        let s = standardize(&m).unwrap();
        for j in 0..3 {
            let col = s.matrix.column(j);
            let mean = col.iter().sum::<f64>() / 10.0;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 9.0;
            prop_assert!(mean.abs() < 1e-12);
            prop_assert!((var - 1.0).abs() < 1e-12);
        }
    }
}
