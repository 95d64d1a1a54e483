use mlnetreg::io::{self, NetworkFormat};
use mlnetreg::DenseMatrix;
use proptest::prelude::*;

fn symmetric(n: usize, vals: &[f64]) -> DenseMatrix {
    let mut m = DenseMatrix::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        for j in i..n {
            m[(i, j)] = vals[k];
            m[(j, i)] = vals[k];
            k += 1;
        }
    }
    m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn dense_file_round_trip_is_bit_exact(vals in proptest::collection::vec(-1e6f64..1e6, 21)) {
        // 6x6 supra with N = 3, L = 2
        let m = symmetric(6, &vals);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("supra.csv");
        io::write_supra(&path, &m).unwrap();
        let loaded = io::load_network(&path, NetworkFormat::DenseSupra, Some(3), Some(2)).unwrap();
        prop_assert_eq!((loaded.n_nodes, loaded.n_layers), (3, 2));
        prop_assert_eq!(loaded.supra.data(), m.data());
    }

    #[test]
    fn edge_list_round_trip(vals in proptest::collection::vec(0.0f64..5.0, 21)) {
        let m = symmetric(6, &vals);
        let text = io::edge_list_to_string(&m, 3);
        let loaded = io::parse_network(&text, "mem".as_ref(), NetworkFormat::EdgeList, Some(3), Some(2)).unwrap();
        prop_assert_eq!(loaded.supra.data(), m.data());
    }
}

#[test]
fn bad_files_are_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "1,2\n3\n").unwrap();
    assert!(io::load_network(&path, NetworkFormat::DenseSupra, Some(1), Some(2)).is_err());
    assert!(io::load_network(&dir.path().join("missing.csv"), NetworkFormat::EdgeList, None, None).is_err());
}
