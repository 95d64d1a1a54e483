use mlnetreg::linalg::{leading_eigenpair, leading_eigenpair_and_second, second_eigenvalue, symmetric_eigen};
use mlnetreg::DenseMatrix;
use proptest::prelude::*;
use testkit::{eigenvector, jacobi_eigen, random_symmetric, relative_diff, sign_free_distance, SplitMix};

fn to_dense(m: &testkit::Mat) -> DenseMatrix {
    DenseMatrix::from_rows(m).unwrap()
}

#[test]
fn random_matrices_match_jacobi() {
    for seed in 0..30u64 {
        let mut rng = SplitMix::new(seed);
        let n = rng.below(2, 25);
        let m = random_symmetric(n, &mut rng);
        let (values, vectors) = jacobi_eigen(&m);
        // the power method targets the largest eigenvalue, so skip the
        // rare draws where it is not well separated from the rest
        if values[0] - values[1] < 1e-3 {
            continue;
        }
        let dm = to_dense(&m);
        let (lead, l2) = leading_eigenpair_and_second(&dm, 1e-12, 200_000).unwrap();
        assert!(relative_diff(lead.value, values[0]) < 1e-8, "seed {seed}");
        assert!(relative_diff(l2, values[1]) < 1e-8, "seed {seed}: {l2} vs {}", values[1]);
        assert!(sign_free_distance(&lead.vector, &eigenvector(&vectors, 0)) < 1e-8);
        let cold = second_eigenvalue(&dm, &lead, 1e-12, 200_000).unwrap();
        assert!(relative_diff(cold, values[1]) < 1e-8);
    }
}

#[test]
fn small_jacobi_agrees_with_oracle() {
    let mut rng = SplitMix::new(99);
    let m = random_symmetric(9, &mut rng);
    let ours = symmetric_eigen(&to_dense(&m)).unwrap();
    let (values, _) = jacobi_eigen(&m);
    for (a, b) in ours.values.iter().zip(&values) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn vector_sign_is_resolved() {
    let m = vec![vec![2.0, -1.0], vec![-1.0, 2.0]];
    let lead = leading_eigenpair(&to_dense(&m), 1e-12, 10_000).unwrap();
    assert!((lead.value - 3.0).abs() < 1e-10);
    assert!(lead.vector.iter().sum::<f64>() >= 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn eigenvalues_scale_linearly(seed in 0u64..1000, a in 0.1f64..10.0) {
        // nonnegative matrices have a Perron root, which the solver always finds
        let mut rng = SplitMix::new(seed);
        let n = rng.below(3, 12);
        let mut m = random_symmetric(n, &mut rng);
        m.iter_mut().flatten().for_each(|x| *x = x.abs() + 0.1);
        let base = leading_eigenpair(&to_dense(&m), 1e-12, 100_000).unwrap();
        let scaled = leading_eigenpair(&to_dense(&m).scaled(a), 1e-12, 100_000).unwrap();
        prop_assert!(relative_diff(scaled.value, a * base.value) < 1e-9);
        prop_assert!(sign_free_distance(&scaled.vector, &base.vector) < 1e-8);
        prop_assert!(base.residual <= 1e-12);
    }

    #[test]
    fn permutation_conjugation_permutes_vector(seed in 0u64..1000) {
        let mut rng = SplitMix::new(seed);
        let n = rng.below(3, 12);
        let mut m = random_symmetric(n, &mut rng);
        m.iter_mut().flatten().for_each(|x| *x = x.abs() + 0.1);
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, rng.below(0, i + 1));
        }
        let pm: testkit::Mat = (0..n).map(|i| (0..n).map(|j| m[perm[i]][perm[j]]).collect()).collect();
        let a = leading_eigenpair(&to_dense(&m), 1e-12, 100_000).unwrap();
        let b = leading_eigenpair(&to_dense(&pm), 1e-12, 100_000).unwrap();
        let permuted: Vec<f64> = perm.iter().map(|&p| a.vector[p]).collect();
        prop_assert!(sign_free_distance(&permuted, &b.vector) < 1e-8);
    }
}
