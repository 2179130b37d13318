//! The four-organization example: frozen records and directional score
//! changes under each reweighting.

use careerflow::flownet::window_aggregate;
use careerflow::ingest::{load_corpus, write_records_csv, RuleSet};
use careerflow::model::{FlowNetwork, OrgId, RankingTable};
use careerflow::r3::{transform, R3Params, TransformMode};
use careerflow::rank::{ranking_table, windowed_rankings, HitsConfig, RankTransform, WindowPlan};
use careerflow::synth::{four_org_scenario, DECLINE, STABLE, STARTUP, UNI};

const WINDOW: (i32, i32) = (2006, 2010);

fn table(net: &FlowNetwork) -> RankingTable {
    let g = window_aggregate(net, WINDOW).unwrap();
    ranking_table(&g, WINDOW, &HitsConfig::default()).unwrap()
}

fn hub(t: &RankingTable, org: &str) -> f64 {
    t.get(&OrgId::new(org).unwrap()).unwrap().hub
}

fn auth(t: &RankingTable, org: &str) -> f64 {
    t.get(&OrgId::new(org).unwrap()).unwrap().authority
}

fn ranked(mode: Option<TransformMode>) -> RankingTable {
    let s = four_org_scenario();
    match mode {
        None => table(&s.network),
        Some(m) => table(&transform(&s.network, &s.corpus, &R3Params::default(), m).unwrap()),
    }
}

#[test]
fn records_match_the_frozen_file() {
    let s = four_org_scenario();
    let mut out = Vec::new();
    write_records_csv(&s.corpus, &mut out).unwrap();
    assert_eq!(
        String::from_utf8(out).unwrap(),
        include_str!("golden/four_org_records.csv")
    );
}

#[test]
fn frozen_records_reload_to_the_same_corpus() {
    let s = four_org_scenario();
    let mut rules = RuleSet::defaults();
    rules
        .extend(&RuleSet::from_reader(include_str!("golden/four_org_rules.csv").as_bytes()).unwrap())
        .unwrap();
    let (corpus, report) = load_corpus(
        include_str!("golden/four_org_records.csv").as_bytes(),
        &rules,
        Some(2010),
    )
    .unwrap();
    assert!(report.diagnostics.is_empty());
    assert_eq!(corpus.trajectories(), s.corpus.trajectories());
}

#[test]
fn baseline_stable_is_top_authority() {
    let t = ranked(None);
    assert_eq!(t.top_authority().unwrap().org.as_str(), STABLE);
}

#[test]
fn resources_raise_uni_authority() {
    let (before, after) = (ranked(None), ranked(Some(TransformMode::Resources)));
    assert!(auth(&after, UNI) > auth(&before, UNI) + 0.05);
}

#[test]
fn retention_makes_decline_top_hub() {
    let t = ranked(Some(TransformMode::Retention));
    assert_eq!(t.top_hub().unwrap().org.as_str(), DECLINE);
    assert!(hub(&t, UNI) < 0.05);
}

#[test]
fn growth_lifts_startup_and_stable_hub() {
    let (before, after) = (ranked(None), ranked(Some(TransformMode::Growth)));
    assert!(auth(&after, STARTUP) > auth(&after, STABLE));
    assert!(auth(&before, STARTUP) < auth(&before, STABLE));
    assert!(hub(&after, STABLE) > hub(&before, STABLE));
}

#[test]
fn unified_spreads_authority() {
    let t = ranked(Some(TransformMode::Unified));
    assert_eq!(t.top_hub().unwrap().org.as_str(), DECLINE);
    let mass: Vec<f64> = [STABLE, UNI, STARTUP].iter().map(|o| auth(&t, o)).collect();
    let total: f64 = mass.iter().sum();
    assert!(mass.iter().all(|m| m / total <= 0.6));
    let base = ranked(None);
    let base_mass: Vec<f64> = [STABLE, UNI, STARTUP].iter().map(|o| auth(&base, o)).collect();
    assert!(base_mass[0] / base_mass.iter().sum::<f64>() > mass[0] / total);
}

#[test]
fn r3_erases_the_stable_lead() {
    let s = four_org_scenario();
    let plan = WindowPlan {
        len: 5,
        step: 5,
        from: 2006,
        to: 2010,
    };
    let cfg = HitsConfig::default();
    let gf = windowed_rankings(&s.network, &s.corpus, &plan, RankTransform::None, &cfg).unwrap();
    let r3 = windowed_rankings(
        &s.network,
        &s.corpus,
        &plan,
        RankTransform::R3(R3Params::default()),
        &cfg,
    )
    .unwrap();
    assert_eq!((gf.tables.len(), r3.tables.len()), (1, 1));
    let gap = |t: &RankingTable| auth(t, STABLE) - auth(t, STARTUP);
    assert!(gap(&gf.tables[0]) > 0.5);
    assert!(gap(&r3.tables[0]) < 0.05);
}
