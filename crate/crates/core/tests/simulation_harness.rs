use mlnetreg::linalg::smallest_singular_value_residual;
use mlnetreg::regression::ModelKind;
use mlnetreg::simulation::{run_experiment, run_replication, sigma_min_study, LayerDesign};
use mlnetreg::{io, AnRule, DenseMatrix, ExperimentConfig, ExperimentKind};
use testkit::{matmul, normal_equations, smallest_singular_value, transpose, SplitMix};

fn small(kind: ExperimentKind, n: usize, reps: usize) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(kind);
    c.n_values = vec![n];
    c.n_reps = reps;
    c.master_seed = 21;
    c.threads = Some(1);
    c
}

#[test]
fn mse_decomposes_into_variance_and_bias() {
    let config = small(ExperimentKind::CmnetrNoisy, 40, 25);
    let report = run_experiment(&config).unwrap();
    let cell = report.cell(40, AnRule::SqrtN, ModelKind::CMNetR).unwrap();
    let k = cell.n_success as f64;
    for coef in &cell.coefficients {
        let expected = coef.sd.powi(2) * (k - 1.0) / k + coef.bias.powi(2);
        assert!((coef.mse - expected).abs() < 1e-10 * expected.max(1.0), "{}", coef.name);
    }
    // the summary mean is the mean of the per-replication estimates
    let estimates: Vec<f64> = (0..25)
        .map(|r| run_replication(&config, 40, r).unwrap().fits[0].estimates.clone().unwrap()[0])
        .collect();
    let mean = estimates.iter().sum::<f64>() / 25.0;
    assert!((cell.coefficient("x1").unwrap().mean - mean).abs() < 1e-12);
}

#[test]
fn thread_count_never_changes_the_report() {
    let mut config = small(ExperimentKind::CcmnetrNoiseless, 40, 12);
    config.n_values = vec![30, 40];
    let run = |c: &ExperimentConfig| {
        let mut report = run_experiment(c).unwrap();
        report.wall_time_seconds = None;
        io::to_sorted_json(&report).unwrap()
    };
    let one = run(&config);
    config.threads = Some(4);
    let four = run(&config);
    assert_eq!(one, four);
}

#[test]
fn fixed_effects_estimates_do_not_concentrate() {
    // the community indicators are nearly collinear with C, so β̂_S stays noisy
    let mut config = small(ExperimentKind::RcfeComparison, 100, 40);
    config.n_values = vec![100, 300];
    let report = run_experiment(&config).unwrap();
    let sd = |n| report.cell(n, AnRule::LinearN, ModelKind::RCFE).unwrap().coefficient("s1").unwrap().sd;
    assert!(sd(300) > 0.5 * sd(100), "{} vs {}", sd(300), sd(100));
    let cm = report.cell(300, AnRule::LinearN, ModelKind::CMNetR).unwrap();
    assert!((cm.coefficient("x1").unwrap().mean - 1.0).abs() < 0.1);
}

#[test]
fn sigma_min_matches_gram_oracle() {
    let mut rng = SplitMix::new(2);
    let x: testkit::Mat = (0..12).map(|_| vec![rng.normal(), rng.normal()]).collect();
    let v: testkit::Mat = (0..12).map(|_| vec![rng.uniform(), rng.uniform()]).collect();
    // residual of each column of V after regressing on X
    let resid: testkit::Mat = {
        let cols: Vec<Vec<f64>> = transpose(&v)
            .iter()
            .map(|col| {
                let b = normal_equations(&x, col);
                let fitted = matmul(&x, &b.iter().map(|c| vec![*c]).collect());
                col.iter().zip(&fitted).map(|(a, f)| a - f[0]).collect()
            })
            .collect();
        transpose(&cols)
    };
    let expected = smallest_singular_value(&resid);
    let ours = smallest_singular_value_residual(&DenseMatrix::from_rows(&x).unwrap(), &DenseMatrix::from_rows(&v).unwrap()).unwrap();
    assert!((ours - expected).abs() < 1e-10 * expected.max(1e-3));
}

#[test]
fn sigma_min_study_covers_both_variants() {
    let mut config = small(ExperimentKind::SigmaMinStudy, 30, 1);
    config.n_values = vec![30, 60];
    let rows = sigma_min_study(&config).unwrap();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0].variant, LayerDesign::IdenticalUniform);
    assert_eq!(rows[1].variant, LayerDesign::DistinctProbabilities);
    for r in &rows {
        assert!((r.scaled - r.sigma_min * (r.n as f64).sqrt()).abs() < 1e-15);
        assert!(r.sigma_min > 0.0);
    }
}

#[test]
fn network_only_model_without_covariates() {
    let mut config = small(ExperimentKind::CcmnetrNoiseless, 30, 5);
    config.true_beta.x = Vec::new();
    let rec = run_replication(&config, 30, 0).unwrap();
    assert_eq!(rec.fits[0].error, None);
    let report = run_experiment(&config).unwrap();
    let cell = report.cell(30, AnRule::SqrtN, ModelKind::CCMNetR).unwrap();
    assert_eq!(cell.coefficients.len(), 1);
    assert_eq!(cell.n_success, 5);
}

#[test]
fn invalid_configs_are_rejected() {
    let mut config = small(ExperimentKind::CmnetrNoiseless, 7, 3);
    assert!(run_experiment(&config).is_err());
    config.n_values = vec![50];
    config.n_reps = 0;
    assert!(run_experiment(&config).is_err());
}
