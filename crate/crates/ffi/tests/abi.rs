use std::ffi::{CStr, CString};
use std::ptr;

use careerflow_ffi::*;

const RECORDS: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/tests/golden/four_org_records.csv");
const RULES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/tests/golden/four_org_rules.csv");

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = cf_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

unsafe fn scenario() -> *mut CfCorpus {
    let mut corpus = ptr::null_mut();
    let status = cf_corpus_load(c(RECORDS).as_ptr(), c(RULES).as_ptr(), 2010, &mut corpus);
    assert_eq!(status, CfStatus::Ok);
    corpus
}

unsafe fn rows(ranking: *const CfRanking) -> Vec<(String, CfRankRow)> {
    (0..cf_ranking_len(ranking))
        .map(|i| {
            let mut row = CfRankRow::default();
            assert_eq!(cf_ranking_row(ranking, i, &mut row), CfStatus::Ok);
            let name = CStr::from_ptr(cf_ranking_org(ranking, i)).to_str().unwrap().to_string();
            (name, row)
        })
        .collect()
}

#[test]
fn scenario_pipeline_through_the_c_interface() {
    unsafe {
        let corpus = scenario();
        assert_eq!(cf_corpus_horizon(corpus), 2010);
        assert_eq!(cf_corpus_person_count(corpus), 318);

        let mut net = ptr::null_mut();
        assert_eq!(cf_network_build(corpus, 2006, 2010, false, &mut net), CfStatus::Ok);
        let w = cf_network_weight(net, c("DECLINE-LLC").as_ptr(), c("STABLE-LLC").as_ptr(), 2010);
        assert_eq!(w, 10.0);

        let params = cf_r3_params_default();
        let mut r3 = ptr::null_mut();
        assert_eq!(
            cf_network_transform(net, corpus, CfTransform::Unified, &params, &mut r3),
            CfStatus::Ok
        );

        let mut ranking = ptr::null_mut();
        assert_eq!(cf_rank_window(r3, 2006, 2010, 0.0, 0, &mut ranking), CfStatus::Ok);
        assert!(cf_ranking_converged(ranking));
        let got = rows(ranking);
        // Same numbers as the frozen CLI output.
        let golden = include_str!("../../core/tests/golden/four_org_rank_r3.csv");
        for line in golden.lines().skip(1) {
            let f: Vec<&str> = line.split(',').collect();
            let (_, row) = got.iter().find(|(name, _)| name == f[0]).unwrap();
            assert_eq!(format!("{:.9}", row.hub), f[3]);
            assert_eq!(row.hub_rank.to_string(), f[4]);
            assert_eq!(format!("{:.9}", row.authority), f[5]);
            assert_eq!(row.authority_rank.to_string(), f[6]);
        }

        cf_ranking_free(ranking);
        cf_network_free(r3);
        cf_network_free(net);
        cf_corpus_free(corpus);
    }
}

#[test]
fn failures_set_a_status_and_message() {
    unsafe {
        let mut corpus = ptr::null_mut();
        let status = cf_corpus_load(c("/nonexistent/records.csv").as_ptr(), ptr::null(), 0, &mut corpus);
        assert_eq!(status, CfStatus::Io);
        assert!(corpus.is_null());
        assert!(!last_error().is_empty());

        assert_eq!(
            cf_corpus_load(ptr::null(), ptr::null(), 0, &mut corpus),
            CfStatus::NullPointer
        );
        assert!(last_error().contains("records_path"));

        let corpus = scenario();
        let mut net = ptr::null_mut();
        assert_eq!(
            cf_network_build(corpus, 2010, 2006, false, &mut net),
            CfStatus::InvalidArgument
        );
        assert_eq!(
            cf_network_build(corpus, 2006, 2010, false, ptr::null_mut()),
            CfStatus::NullPointer
        );

        assert_eq!(cf_network_build(corpus, 2006, 2010, false, &mut net), CfStatus::Ok);
        let mut bad = cf_r3_params_default();
        bad.gamma = -1.0;
        let mut out = ptr::null_mut();
        assert_eq!(
            cf_network_transform(net, corpus, CfTransform::Growth, &bad, &mut out),
            CfStatus::InvalidArgument
        );

        let mut ranking = ptr::null_mut();
        assert_eq!(cf_rank_window(net, 2006, 2010, 0.0, 0, &mut ranking), CfStatus::Ok);
        let mut row = CfRankRow::default();
        assert_eq!(cf_ranking_row(ranking, 99, &mut row), CfStatus::OutOfRange);
        assert!(cf_ranking_org(ranking, 99).is_null());

        cf_ranking_free(ranking);
        cf_network_free(net);
        cf_corpus_free(corpus);
    }
}

#[test]
fn null_handles_are_harmless() {
    unsafe {
        cf_corpus_free(ptr::null_mut());
        cf_network_free(ptr::null_mut());
        cf_ranking_free(ptr::null_mut());
        assert_eq!(cf_corpus_person_count(ptr::null()), 0);
        assert_eq!(cf_ranking_len(ptr::null()), 0);
        assert_eq!(cf_network_weight(ptr::null(), ptr::null(), ptr::null(), 2000), 0.0);
    }
}

#[test]
fn scalar_formulas() {
    let logistic2 = 1.0 / (1.0 + (-2.0f64).exp());
    assert!((cf_r_src(20.0, 10.0, 0.5) - logistic2).abs() < 1e-12);
    assert_eq!(cf_r_src(10.0, 10.0, 0.5), 0.5);
    assert!((cf_relative_growth(9.0, 0.0, 0.0) - 10f64.ln()).abs() < 1e-12);
}

#[test]
fn dense_hits_on_a_star() {
    // Node 0 points at 1, 2 and 3.
    let n = 4;
    let mut w = vec![0.0; n * n];
    w[1..n].fill(1.0);
    let (mut hub, mut auth) = (vec![0.0; n], vec![0.0; n]);
    let status = unsafe { cf_hits_dense(n, w.as_ptr(), 1e-12, 1000, hub.as_mut_ptr(), auth.as_mut_ptr()) };
    assert_eq!(status, CfStatus::Ok);
    assert!((hub[0] - 1.0).abs() < 1e-12);
    for a in &auth[1..] {
        assert!((a - 1.0 / 3f64.sqrt()).abs() < 1e-12);
    }
    let status = unsafe { cf_hits_dense(n, ptr::null(), 0.0, 0, hub.as_mut_ptr(), auth.as_mut_ptr()) };
    assert_eq!(status, CfStatus::NullPointer);
}

#[test]
fn header_declares_every_export() {
    let header = include_str!("../include/careerflow.h");
    let source = include_str!("../src/lib.rs");
    let exported: Vec<&str> = source
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exported.len() >= 15);
    for name in exported {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
}
