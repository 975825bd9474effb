//! End-to-end runs through the public API.

use std::sync::Arc;

use renormlab::analysis::{ug_witness, witness_sweep};
use renormlab::biortho::{extract_system, ShiftedAverageStream, DEFAULT_SEARCH_BUDGET};
use renormlab::cascade::{build_cascade, cascade_eval, cascade_invariant_report, Backend, CascadeConfig, EtaSchedule};
use renormlab::directions::direction_set;
use renormlab::verify::{figure_rows, run_verify_all, RunConfig, SECTION_ORDER};
use renormlab::{NormOracle, RenormError, SparseVector};

const ETAS: EtaSchedule = EtaSchedule {
    first: 0.02,
    ratio: 0.5,
};

#[test]
fn extracted_pairs_drive_a_cascade_with_witnesses() {
    let sys = extract_system(&ShiftedAverageStream, 0.1, 5, DEFAULT_SEARCH_BUDGET).unwrap();
    // five stages only, so start with small etas to reach useful scales
    let etas = EtaSchedule {
        first: 1e-5,
        ratio: 0.5,
    };
    let cfg = CascadeConfig::with_pairs(0.4, etas, Arc::new(sys.pair_source().unwrap()));
    let cn = build_cascade(cfg).unwrap();
    // x_1 = e_1 + e_2; h = e_1 - e_2 is invisible to f_1 = (e_1 + e_2)/2
    let h = SparseVector::from_pairs([(1, 1.0), (2, -1.0)]);
    let w = ug_witness(&cn, &h, 1e-3).unwrap();
    assert!(w.pass && w.n0 == 1, "{w:?}");
    assert!(matches!(
        ug_witness(&cn, &h, 1e-5),
        Err(RenormError::InsufficientStages { .. })
    ));
}

#[test]
fn both_backends_agree_on_the_invariants() {
    for backend in [Backend::RescaleExact, Backend::LfcSup] {
        let mut cfg = CascadeConfig::coordinate(0.3, ETAS);
        cfg.backend = backend;
        let cn = build_cascade(cfg).unwrap();
        let r = cascade_invariant_report(&cn, 12, 300, 5).unwrap();
        assert!(r.pass, "{backend:?}: {:?}", r.first_counterexample);
        let (_, report) = witness_sweep(&cn, &direction_set().unwrap()[..8], &[1e-2, 1e-4]).unwrap();
        assert!(report.pass, "{backend:?}");
    }
}

#[test]
fn cascade_is_an_equivalent_norm_as_an_oracle() {
    let cn = build_cascade(CascadeConfig::coordinate(0.4, ETAS)).unwrap();
    let norm = NormOracle::new(cn.clone());
    let x = SparseVector::from_pairs([(3, 0.7), (9, -0.2)]);
    let (v, n) = cascade_eval(&cn, &x).unwrap();
    assert_eq!(norm.eval(&x).unwrap(), v);
    assert!(n >= 1);
    assert!((0.7..=4.0 * 0.7).contains(&v));
}

#[test]
fn verify_sections_and_figure_share_one_config() {
    let cfg = RunConfig::from_json(r#"{"delta": 0.3, "seed": 3, "figure": {"grid": 11}}"#).unwrap();
    let b = run_verify_all(&cfg);
    assert_eq!(
        b.sections.iter().map(|s| s.id.as_str()).collect::<Vec<_>>(),
        SECTION_ORDER
    );
    assert!(b.pass, "{:?}", b.first_failure);
    let rows = figure_rows(&cfg).unwrap();
    assert_eq!(rows.len(), 121);
    // the 11-point grid has the origin as its centre
    let v = rows.iter().find(|r| r.y1 == 0.0 && r.y2 == 0.0).unwrap();
    assert_eq!(v.seed_norm, 0.0);
}
