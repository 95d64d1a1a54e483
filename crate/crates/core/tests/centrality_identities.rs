use mlnetreg::centrality::{community_centrality, eigenvector_centrality, CentralityOptions};
use mlnetreg::network::{assemble_supra, make_multiplex};
use mlnetreg::synth::{self, SbmSpec, WeightDist};
use mlnetreg::{CommunityStructure, DenseMatrix};
use proptest::prelude::*;

fn instance() -> impl Strategy<Value = (DenseMatrix, Vec<usize>)> {
    (2usize..25, 1usize..5, 1usize..6).prop_flat_map(|(n, l, r)| {
        let r = r.min(n);
        (
            proptest::collection::vec(0.0f64..3.0, n * l),
            proptest::collection::vec(1usize..=r, n - r),
            Just((n, l, r)),
        )
            .prop_map(|(data, tail, (n, l, r))| {
                // first r nodes guarantee every community is non-empty
                let labels: Vec<usize> = (1..=r).chain(tail).collect();
                (DenseMatrix::new(n, l, data).unwrap(), labels)
            })
    })
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn mass_and_constancy((c, labels) in instance()) {
        let comm = CommunityStructure::from_labels(labels.clone()).unwrap();
        let (u, z) = community_centrality(&c, &comm).unwrap();
        let l = c.cols() as f64;
        prop_assert!(rel(l * z.iter().sum::<f64>(), c.sum()) < 1e-10 || c.sum() == 0.0);
        prop_assert!(rel(u.sum(), c.sum()) < 1e-10 || c.sum() == 0.0);
        for i in 0..labels.len() {
            for j in 0..labels.len() {
                if labels[i] == labels[j] {
                    prop_assert_eq!(z[i], z[j]);
                    prop_assert_eq!(u.row(i), u.row(j));
                }
            }
        }
    }

    #[test]
    fn linear_in_c((c, labels) in instance(), a in -5.0f64..5.0) {
        let comm = CommunityStructure::from_labels(labels).unwrap();
        let (_, z) = community_centrality(&c, &comm).unwrap();
        let (_, za) = community_centrality(&c.scaled(a), &comm).unwrap();
        for (x, y) in z.iter().zip(&za) {
            prop_assert!((a * x - y).abs() <= 1e-12 * (1.0 + x.abs() * a.abs()));
        }
    }

    #[test]
    fn degenerate_partitions(c in proptest::collection::vec(0.0f64..3.0, 12)) {
        let c = DenseMatrix::new(6, 2, c).unwrap();
        // one community per node: Z is the row mean of C
        let singletons = CommunityStructure::from_labels((1..=6).collect()).unwrap();
        let (u, z) = community_centrality(&c, &singletons).unwrap();
        prop_assert_eq!(&u, &c);
        for i in 0..6 {
            prop_assert!((z[i] - (c[(i, 0)] + c[(i, 1)]) / 2.0).abs() < 1e-15);
        }
        // one community: Z is the grand mean everywhere
        let single = CommunityStructure::from_labels(vec![1; 6]).unwrap();
        let (_, z) = community_centrality(&c, &single).unwrap();
        let grand = c.sum() / 12.0;
        prop_assert!(z.iter().all(|v| (v - grand).abs() < 1e-12));
    }
}

#[test]
fn supra_centrality_is_nonnegative_unit_and_scaled() {
    let labels = synth::balanced_labels(30, 3).unwrap();
    let layers = (0..2)
        .map(|k| {
            synth::sample_sbm_layer(&SbmSpec {
                labels: labels.clone(),
                conn_prob: synth::assortative_probabilities(),
                weight_dist: WeightDist::Uniform12,
                seed: 40 + k,
            })
            .unwrap()
        })
        .collect();
    let b0 = assemble_supra(&make_multiplex(layers).unwrap()).unwrap();
    let bundle = eigenvector_centrality(&b0, 30, 2, 5.0, &CentralityOptions::default()).unwrap();
    assert!(bundle.v.data().iter().all(|x| *x >= 0.0));
    assert!((bundle.v.frobenius_norm() - 1.0).abs() < 1e-12);
    assert!(bundle.c.sub(&bundle.v.scaled(5.0)).unwrap().max_abs() < 1e-15);
    assert!(bundle.gap > 0.0);
    let doubled = eigenvector_centrality(&b0.scaled(2.0), 30, 2, 5.0, &CentralityOptions::default()).unwrap();
    assert!((doubled.lambda1 - 2.0 * bundle.lambda1).abs() < 1e-8 * bundle.lambda1);
    assert!(doubled.v.sub(&bundle.v).unwrap().max_abs() < 1e-8);
}

#[test]
fn relabelling_communities_permutes_z() {
    let c = DenseMatrix::from_fn(8, 3, |i, j| (i * 3 + j) as f64 * 0.1);
    let labels = vec![1, 2, 1, 3, 2, 3, 1, 2];
    let swapped: Vec<usize> = labels.iter().map(|&x| [0, 3, 1, 2][x]).collect();
    let (_, a) = community_centrality(&c, &CommunityStructure::from_labels(labels).unwrap()).unwrap();
    let (_, b) = community_centrality(&c, &CommunityStructure::from_labels(swapped).unwrap()).unwrap();
    assert_eq!(a, b);
}
