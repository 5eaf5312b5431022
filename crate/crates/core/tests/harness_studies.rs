use llg_core::harness::{
    self, CoupledStudy3d, ErrorColumn, NormStudy, Refinement, SpatialStudy1d, TemporalStudy1d,
};
use llg_core::manufactured::InitialProfile;
use llg_core::{Dim, Error, Scheme};

fn csv(table: &harness::ConvergenceTable) -> String {
    let mut buf = Vec::new();
    harness::write_table(table, &mut buf, false).unwrap();
    String::from_utf8(buf).unwrap()
}

#[test]
fn halving_k_halves_the_temporal_error() {
    let study = TemporalStudy1d {
        cells: 200,
        ks: vec![4e-3, 2e-3, 1e-3],
        ..Default::default()
    };
    let table = harness::run_temporal_study_1d(&study).unwrap();
    for w in table.rows.windows(2) {
        let ratio = w[0].err_l2 / w[1].err_l2;
        assert!((1.7..=2.3).contains(&ratio), "{ratio}");
    }
    let order = table.order(Refinement::K).unwrap();
    assert!((order.l2 - 1.0).abs() < 0.15, "{order:?}");
    assert!(table.order(Refinement::H).is_none());
}

#[test]
fn spatial_refinement_is_second_order() {
    let study = SpatialStudy1d {
        k: 1e-5,
        cells: vec![8, 16, 32],
        ..Default::default()
    };
    let table = harness::run_spatial_study_1d(&study).unwrap();
    let order = table.order(Refinement::H).unwrap();
    for c in [ErrorColumn::Linf, ErrorColumn::L2] {
        assert!((order.get(c) - 2.0).abs() < 0.25, "{order:?}");
    }
}

#[test]
fn coupled_study_reports_both_orders() {
    let study = CoupledStudy3d {
        levels: vec![(4, 4), (8, 6), (16, 8)],
        ..CoupledStudy3d::new(false)
    };
    let table = harness::run_coupled_study_3d(&study).unwrap();
    assert_eq!(table.rows.len(), 3);
    assert_eq!(table.orders.len(), 2);
    assert_eq!(table.orders[0].parameter, Refinement::K);
    assert_eq!(table.orders[1].parameter, Refinement::H);
    let text = csv(&table);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1 + 3 + 2);
    assert!(lines[4].starts_with("order,,"));
    assert!(lines[5].starts_with(",order,"));
}

#[test]
fn default_temporal_table_has_seven_rows_and_one_order_row() {
    let table = harness::run_temporal_study_1d(&TemporalStudy1d::default()).unwrap();
    let text = csv(&table);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "k,h,err_linf,err_l2,err_h1");
    assert_eq!(lines.len(), 1 + 7 + 1);
    assert!(lines[8].starts_with("order,,"));
    let ks: Vec<f64> = table.rows.iter().map(|r| r.k).collect();
    assert_eq!(ks, harness::TEMPORAL_KS_1D.to_vec());
}

#[test]
fn reruns_write_identical_bytes() {
    let study = TemporalStudy1d {
        cells: 64,
        ks: vec![1e-2, 5e-3, 2.5e-3],
        ..Default::default()
    };
    let a = csv(&harness::run_temporal_study_1d(&study).unwrap());
    let b = csv(&harness::run_temporal_study_1d(&study).unwrap());
    assert_eq!(a, b);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    harness::write_table_csv(&harness::run_temporal_study_1d(&study).unwrap(), &path).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), a);
}

#[test]
fn one_row_tables_are_rejected() {
    let study = TemporalStudy1d {
        cells: 32,
        ks: vec![1e-2],
        ..Default::default()
    };
    let table = harness::run_temporal_study_1d(&study).unwrap();
    assert!(table.orders.is_empty());
    let err = harness::write_table(&table, Vec::new(), false).unwrap_err();
    assert!(matches!(err, Error::InvalidOrderInput(_)));
}

#[test]
fn order_estimates_validate_input() {
    assert!(harness::estimate_order(&[1.0], &[1.0]).is_err());
    assert!(harness::estimate_order(&[1.0, 2.0], &[1.0]).is_err());
    assert!(harness::estimate_order(&[1.0, 2.0], &[0.0, 1.0]).is_err());
    assert!(harness::estimate_order(&[1.0, 1.0], &[1.0, 2.0]).is_err());
    let fit = harness::estimate_order(&[1.0, 0.5, 0.25], &[4.0, 1.0, 0.25]).unwrap();
    assert!((fit.slope - 2.0).abs() < 1e-14);
    assert_eq!(fit.pairwise.len(), 2);
}

#[test]
fn sparser_sampling_never_reports_more_deviation() {
    let base = NormStudy {
        levels: vec![(1e-3, 100), (5e-4, 100)],
        ..NormStudy::one_d()
    };
    let dense = harness::run_norm_study(&NormStudy {
        record_every: 1,
        ..base.clone()
    })
    .unwrap();
    let sparse = harness::run_norm_study(&NormStudy {
        record_every: 10,
        ..base
    })
    .unwrap();
    for (d, s) in dense.rows.iter().zip(&sparse.rows) {
        assert!(s.max_unit_deviation <= d.max_unit_deviation);
        assert!(d.max_unit_deviation <= 1e-13);
    }
}

#[test]
fn norm_study_rejects_mismatched_profiles() {
    let study = NormStudy {
        profile: InitialProfile::Xyz3d,
        ..NormStudy::one_d()
    };
    assert!(matches!(
        harness::run_norm_study(&study),
        Err(Error::InvalidConfig(_))
    ));
    let study = NormStudy {
        record_every: 0,
        ..NormStudy::one_d()
    };
    assert!(harness::run_norm_study(&study).is_err());
}

#[test]
fn projection_norm_study_is_exact() {
    let study = NormStudy {
        dim: Dim::Three,
        scheme: Scheme::Bdf1Projection,
        levels: vec![(2e-2, 6), (1e-2, 8)],
        ..NormStudy::three_d(false)
    };
    for row in harness::run_norm_study(&study).unwrap().rows {
        assert!(row.max_unit_deviation <= 1e-15);
    }
}

#[test]
fn failed_rows_keep_the_completed_prefix() {
    let study = CoupledStudy3d {
        levels: vec![(4, 4), (8, 6), (16, 1)],
        ..CoupledStudy3d::new(false)
    };
    match harness::run_coupled_study_3d(&study) {
        Err(Error::StudyAborted { partial, source }) => {
            assert_eq!(partial.rows.len(), 2);
            assert_eq!(partial.orders.len(), 2);
            assert!(matches!(*source, Error::InvalidGrid(_)), "{source:?}");
        }
        other => panic!("expected an aborted study, got {other:?}"),
    }
}
