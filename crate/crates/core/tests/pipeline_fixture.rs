use mlnetreg::io;
use mlnetreg::pipeline::{self, symmetrize_and_scale, vif_screen, ScaleMode, WiodOptions};
use mlnetreg::DenseMatrix;

#[test]
fn fixture_screening_and_test() {
    let fixture = pipeline::synthetic_fixture(1).unwrap();
    let report = pipeline::wiod_pipeline(&fixture.bundle, &WiodOptions::default()).unwrap();
    let mut dropped = report.vif_dropped.clone();
    dropped.sort();
    assert_eq!(dropped, fixture.collinear);
    assert!(report.f_test.f_stat > 0.0);
    assert!(report.full.r_squared >= report.reduced.r_squared);
    assert_eq!(report.ranking.len(), pipeline::FIXTURE_NODES);
    assert_eq!(report.community_z.len(), pipeline::FIXTURE_COMMUNITIES);
}

#[test]
fn fixture_files_reload_to_the_same_report() {
    let fixture = pipeline::synthetic_fixture(2).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let paths = pipeline::write_fixture(&fixture, dir.path()).unwrap();
    let flows = io::load_flows(&paths.flows, io::NetworkFormat::EdgeList, Some(pipeline::FIXTURE_NODES), Some(pipeline::FIXTURE_LAYERS)).unwrap();
    assert_eq!(flows.supra, fixture.bundle.flows);
    let comm = io::load_communities(&paths.communities).unwrap();
    assert_eq!(comm, fixture.bundle.communities);
}

#[test]
fn scaling_lands_in_zero_two() {
    let flows = DenseMatrix::from_fn(4, 4, |i, j| (i * 4 + j) as f64);
    let b = symmetrize_and_scale(&flows, 2, ScaleMode::Global).unwrap();
    assert!(b.is_symmetric());
    assert_eq!(b.max_abs(), 2.0);
    let per = symmetrize_and_scale(&flows, 2, ScaleMode::PerBlock).unwrap();
    for (r, c) in [(0, 0), (0, 2), (2, 0), (2, 2)] {
        assert_eq!(per.submatrix(r, c, 2, 2).max_abs(), 2.0);
    }
    assert!(symmetrize_and_scale(&DenseMatrix::zeros(4, 4), 2, ScaleMode::Global).is_err());
}

#[test]
fn screening_keeps_independent_columns() {
    let mut rng = testkit::SplitMix::new(6);
    let x = DenseMatrix::from_fn(40, 3, |_, _| rng.normal());
    let names: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
    let (kept, rounds) = vif_screen(&x, &names, 5.0).unwrap();
    assert_eq!(kept, vec![0, 1, 2]);
    assert_eq!(rounds.len(), 1);
    assert!(rounds[0].dropped.is_none());
}
