//! C interface to careerflow.
//!
//! Every fallible function returns a [`CfStatus`]; on failure the message is
//! available from [`cf_last_error`] on the same thread. Handles are opaque
//! and must be released with their `_free` function. No function unwinds
//! across the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use careerflow::flownet::{build_network, derive_transitions, filter_postdocs, window_aggregate};
use careerflow::ingest::{load_corpus, RuleSet};
use careerflow::model::{Corpus, FlowNetwork, RankingTable};
use careerflow::r3::{r_src, relative_growth, transform, R3Params, TransformMode};
use careerflow::rank::{hits_dense, ranking_table, HitsConfig};
use careerflow::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    InvalidArgument = 5,
    Data = 6,
    OutOfRange = 7,
    Panic = 8,
}

/// Edge reweighting applied by [`cf_network_transform`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CfTransform {
    Resources = 0,
    Retention = 1,
    Growth = 2,
    Unified = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CfR3Params {
    pub alpha_ratio: f64,
    pub beta_ratio: f64,
    pub gamma: f64,
}

/// One row of a ranking; ranks start at 1.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CfRankRow {
    pub hub: f64,
    pub authority: f64,
    pub hub_rank: u32,
    pub authority_rank: u32,
    pub isolated: bool,
}

/// Loaded and validated career records.
pub struct CfCorpus {
    corpus: Corpus,
}

/// Yearly flow network.
pub struct CfNetwork {
    network: FlowNetwork,
}

/// HITS scores and ranks for one window.
pub struct CfRanking {
    table: RankingTable,
    names: Vec<CString>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(CfStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Io(_) => CfStatus::Io,
            Error::Csv(_) | Error::MissingColumn(_) | Error::Rule { .. } => CfStatus::Parse,
            Error::InvalidParameter(_) => CfStatus::InvalidArgument,
            _ => CfStatus::Data,
        };
        Failure(status, e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure(CfStatus::Io, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CfStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            CfStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(CfStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(CfStatus::InvalidUtf8, format!("`{what}` is not UTF-8")))
}

unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Defaults: alpha and beta ratio 0.5, gamma 1.5.
#[no_mangle]
pub extern "C" fn cf_r3_params_default() -> CfR3Params {
    let p = R3Params::default();
    CfR3Params {
        alpha_ratio: p.alpha_ratio,
        beta_ratio: p.beta_ratio,
        gamma: p.gamma,
    }
}

/// Loads a records CSV. `rules_path` may be null for the built-in rules
/// only; `horizon <= 0` takes the latest year in the records.
///
/// # Safety
/// Strings must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cf_corpus_load(
    records_path: *const c_char,
    rules_path: *const c_char,
    horizon: i32,
    out: *mut *mut CfCorpus,
) -> CfStatus {
    guard(|| {
        let records = text(records_path, "records_path")?;
        let mut rules = RuleSet::defaults();
        if !rules_path.is_null() {
            let extra = RuleSet::from_reader(File::open(text(rules_path, "rules_path")?)?)?;
            rules.extend(&extra)?;
        }
        let horizon = (horizon > 0).then_some(horizon);
        let (corpus, _) = load_corpus(File::open(records)?, &rules, horizon)?;
        put(out, CfCorpus { corpus })
    })
}

/// Number of persons, or 0 for a null handle.
///
/// # Safety
/// `corpus` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cf_corpus_person_count(corpus: *const CfCorpus) -> usize {
    corpus.as_ref().map_or(0, |c| c.corpus.trajectories().len())
}

/// # Safety
/// `corpus` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cf_corpus_horizon(corpus: *const CfCorpus) -> i32 {
    corpus.as_ref().map_or(0, |c| c.corpus.horizon())
}

/// # Safety
/// `corpus` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cf_corpus_free(corpus: *mut CfCorpus) {
    if !corpus.is_null() {
        drop(Box::from_raw(corpus));
    }
}

/// Flow network over the inclusive year range.
///
/// # Safety
/// `corpus` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cf_network_build(
    corpus: *const CfCorpus,
    from: i32,
    to: i32,
    exclude_postdocs: bool,
    out: *mut *mut CfNetwork,
) -> CfStatus {
    guard(|| {
        let c = &get(corpus, "corpus")?.corpus;
        if from > to {
            return Err(Failure(
                CfStatus::InvalidArgument,
                format!("empty year range {from}-{to}"),
            ));
        }
        let transitions = filter_postdocs(&derive_transitions(c), exclude_postdocs);
        let network = build_network(&transitions, c, from..=to)?;
        put(out, CfNetwork { network })
    })
}

/// A reweighted copy of `network`.
///
/// # Safety
/// Handles must be live and `params` readable; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cf_network_transform(
    network: *const CfNetwork,
    corpus: *const CfCorpus,
    mode: CfTransform,
    params: *const CfR3Params,
    out: *mut *mut CfNetwork,
) -> CfStatus {
    guard(|| {
        let net = &get(network, "network")?.network;
        let c = &get(corpus, "corpus")?.corpus;
        let p = get(params, "params")?;
        let params = R3Params {
            alpha_ratio: p.alpha_ratio,
            beta_ratio: p.beta_ratio,
            gamma: p.gamma,
        };
        let mode = match mode {
            CfTransform::Resources => TransformMode::Resources,
            CfTransform::Retention => TransformMode::Retention,
            CfTransform::Growth => TransformMode::Growth,
            CfTransform::Unified => TransformMode::Unified,
        };
        let network = transform(net, c, &params, mode)?;
        put(out, CfNetwork { network })
    })
}

/// Edge weight `source -> target` in `year`; 0 when absent or on bad input.
///
/// # Safety
/// `network` must be null or live; strings must be null or NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn cf_network_weight(
    network: *const CfNetwork,
    source: *const c_char,
    target: *const c_char,
    year: i32,
) -> f64 {
    let lookup = || -> Option<f64> {
        let net = &network.as_ref()?.network;
        let s = careerflow::model::OrgId::new(text(source, "source").ok()?).ok()?;
        let t = careerflow::model::OrgId::new(text(target, "target").ok()?).ok()?;
        Some(net.weight(&s, &t, year))
    };
    catch_unwind(AssertUnwindSafe(lookup)).ok().flatten().unwrap_or(0.0)
}

/// # Safety
/// `network` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cf_network_free(network: *mut CfNetwork) {
    if !network.is_null() {
        drop(Box::from_raw(network));
    }
}

/// HITS over the edges of years `from..=to`. `tol <= 0` or `max_iter == 0`
/// use the defaults (1e-8, 100).
///
/// # Safety
/// `network` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cf_rank_window(
    network: *const CfNetwork,
    from: i32,
    to: i32,
    tol: f64,
    max_iter: u32,
    out: *mut *mut CfRanking,
) -> CfStatus {
    guard(|| {
        let net = &get(network, "network")?.network;
        let cfg = hits_config(tol, max_iter);
        let graph = window_aggregate(net, (from, to))?;
        let table = ranking_table(&graph, (from, to), &cfg)?;
        let names = table
            .entries
            .iter()
            .map(|e| CString::new(e.org.as_str()).map_err(|_| Failure(CfStatus::Data, "nul in org id".into())))
            .collect::<Result<_, _>>()?;
        put(out, CfRanking { table, names })
    })
}

fn hits_config(tol: f64, max_iter: u32) -> HitsConfig {
    let d = HitsConfig::default();
    HitsConfig {
        tol: if tol > 0.0 { tol } else { d.tol },
        max_iter: if max_iter > 0 { max_iter as usize } else { d.max_iter },
    }
}

/// Rows in id order; 0 for a null handle.
///
/// # Safety
/// `ranking` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn cf_ranking_len(ranking: *const CfRanking) -> usize {
    ranking.as_ref().map_or(0, |r| r.table.entries.len())
}

/// Organization id of row `index`, owned by the ranking; null if out of range.
///
/// # Safety
/// `ranking` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn cf_ranking_org(ranking: *const CfRanking, index: usize) -> *const c_char {
    ranking
        .as_ref()
        .and_then(|r| r.names.get(index))
        .map_or(ptr::null(), |c| c.as_ptr())
}

/// # Safety
/// `ranking` must be live and `row` writable.
#[no_mangle]
pub unsafe extern "C" fn cf_ranking_row(ranking: *const CfRanking, index: usize, row: *mut CfRankRow) -> CfStatus {
    guard(|| {
        let r = get(ranking, "ranking")?;
        if row.is_null() {
            return Err(null("row"));
        }
        let e = r.table.entries.get(index).ok_or_else(|| {
            Failure(
                CfStatus::OutOfRange,
                format!("row {index} of {}", r.table.entries.len()),
            )
        })?;
        *row = CfRankRow {
            hub: e.hub,
            authority: e.authority,
            hub_rank: e.hub_rank as u32,
            authority_rank: e.authority_rank as u32,
            isolated: e.isolated,
        };
        Ok(())
    })
}

/// # Safety
/// `ranking` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn cf_ranking_converged(ranking: *const CfRanking) -> bool {
    ranking.as_ref().is_some_and(|r| r.table.converged)
}

/// # Safety
/// `ranking` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cf_ranking_free(ranking: *mut CfRanking) {
    if !ranking.is_null() {
        drop(Box::from_raw(ranking));
    }
}

/// Resource score of one career length against the system mean.
#[no_mangle]
pub extern "C" fn cf_r_src(career_length: f64, system_mean: f64, alpha_ratio: f64) -> f64 {
    let params = R3Params {
        alpha_ratio,
        ..R3Params::default()
    };
    r_src(career_length, system_mean, &params)
}

/// Relative growth from influx, outflux and staff count.
#[no_mangle]
pub extern "C" fn cf_relative_growth(influx: f64, outflux: f64, staff: f64) -> f64 {
    relative_growth(influx, outflux, staff)
}

/// HITS on a dense row-major `n × n` weight matrix; the diagonal is ignored.
/// `hub` and `authority` receive `n` values each.
///
/// # Safety
/// `weights` must hold `n * n` values; `hub` and `authority` `n` each.
#[no_mangle]
pub unsafe extern "C" fn cf_hits_dense(
    n: usize,
    weights: *const f64,
    tol: f64,
    max_iter: u32,
    hub: *mut f64,
    authority: *mut f64,
) -> CfStatus {
    guard(|| {
        if weights.is_null() || hub.is_null() || authority.is_null() {
            return Err(null("weights, hub or authority"));
        }
        let len = n
            .checked_mul(n)
            .ok_or_else(|| Failure(CfStatus::InvalidArgument, "matrix too large".into()))?;
        let w = std::slice::from_raw_parts(weights, len);
        let result = hits_dense(n, w, &hits_config(tol, max_iter))?;
        std::slice::from_raw_parts_mut(hub, n).copy_from_slice(&result.hub);
        std::slice::from_raw_parts_mut(authority, n).copy_from_slice(&result.authority);
        Ok(())
    })
}
