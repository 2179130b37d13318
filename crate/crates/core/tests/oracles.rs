mod common;

use careerflow::analysis::{employment_ccdf, fleiss_kappa, linear_fit};
use careerflow::model::{OrgId, RankEntry, RankingTable};
use careerflow::predict::auc;
use careerflow::r3::{r_src, relative_growth, R3Params};
use careerflow::rank::{hits_dense, rank_change_outliers, HitsConfig, RankKind};
use careerflow::synth::{random_population, PopulationSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn hits_matches_dense_eigenvectors() {
    let cfg = HitsConfig {
        tol: 1e-12,
        max_iter: 10_000,
    };
    for seed in 0..100 {
        let (n, w) = common::random_digraph(seed);
        let got = hits_dense(n, &w, &cfg).unwrap();
        let (hub, auth) = common::hits_oracle(n, &w);
        for i in 0..n {
            assert!((got.hub[i] - hub[i]).abs() < 1e-6, "seed {seed} hub {i}");
            assert!((got.authority[i] - auth[i]).abs() < 1e-6, "seed {seed} auth {i}");
        }
    }
}

#[test]
fn fleiss_worked_example() {
    let table = common::fleiss_example();
    let kappa = fleiss_kappa(&table).unwrap();
    assert!((kappa - common::fleiss_by_pairs(&table)).abs() < 1e-12);
    assert!((kappa - common::FLEISS_EXAMPLE_KAPPA).abs() < 1e-3);
}

#[test]
fn logistic_and_growth_formulas() {
    let p = R3Params::default();
    for (len, mean) in [(20.0, 10.0), (5.0, 10.0), (0.0, 7.0), (31.0, 12.5)] {
        let expected = common::logistic((len - mean) / (0.5 * mean));
        assert!((r_src(len, mean, &p) - expected).abs() < 1e-12);
    }
    assert!((relative_growth(9.0, 0.0, 0.0) - 10f64.ln()).abs() < 1e-12);
    let direct = (1f64.ln() - 10f64.ln()) / (100f64.ln() + 1.0);
    assert!((relative_growth(0.0, 9.0, 99.0) - direct).abs() < 1e-12);
}

fn table(ranks: &[(String, usize)]) -> RankingTable {
    let mut entries: Vec<RankEntry> = ranks
        .iter()
        .map(|(o, r)| RankEntry {
            org: OrgId::new(o.clone()).unwrap(),
            hub: 0.0,
            hub_rank: *r,
            authority: 0.0,
            authority_rank: *r,
            isolated: false,
        })
        .collect();
    entries.sort_by(|a, b| a.org.cmp(&b.org));
    RankingTable {
        window: (2000, 2004),
        entries,
        converged: true,
        iterations: 0,
    }
}

#[test]
fn planted_rank_shuffle_is_recovered() {
    let names: Vec<String> = (0..10).map(|i| format!("n{i}")).collect();
    let base: Vec<(String, usize)> = names.iter().cloned().zip(1..=10).collect();
    // n4, n7 and n9 trade places; everyone else keeps their rank.
    let moved_rank = |i: usize| match i {
        4 => 8,
        7 => 10,
        9 => 5,
        _ => i + 1,
    };
    let moved: Vec<(String, usize)> = (0..10).map(|i| (names[i].clone(), moved_rank(i))).collect();
    let got = rank_change_outliers(&table(&base), &table(&moved), 3, RankKind::Authority).unwrap();

    let x: Vec<f64> = (1..=10).map(f64::from).collect();
    let y: Vec<f64> = (0..10).map(|i| moved_rank(i) as f64).collect();
    let (a, b) = common::least_squares(&x, &y);
    let mut expected: Vec<(usize, f64)> = (0..10).map(|i| (i, (y[i] - a - b * x[i]).abs())).collect();
    expected.sort_by(|p, q| q.1.total_cmp(&p.1));
    let mut top: Vec<&str> = got.iter().map(|(o, _)| o.as_str()).collect();
    top.sort();
    assert_eq!(top, vec!["n4", "n7", "n9"]);
    for ((org, r), (i, e)) in got.iter().zip(&expected) {
        assert_eq!(org.as_str(), names[*i]);
        assert!((r - e).abs() < 1e-9);
    }
}

#[test]
fn auc_matches_pair_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let n = rng.random_range(4..40);
        let labels: Vec<bool> = (0..n).map(|i| i % 3 == 0 || rng.random_bool(0.3)).collect();
        // Coarse scores so ties occur.
        let scores: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..6))).collect();
        if labels.iter().all(|&l| l) {
            continue;
        }
        let got = auc(&labels, &scores).unwrap();
        assert!((got - common::auc_by_pairs(&labels, &scores)).abs() < 1e-12);
    }
}

#[test]
fn linear_fit_matches_normal_equations() {
    let x = [2000.0, 2001.0, 2002.0, 2003.0, 2004.0, 2005.0];
    let y = [10.0, 12.5, 13.0, 16.0, 17.0, 16.5];
    let fit = linear_fit(&x, &y).unwrap();
    let (a, b) = common::least_squares(&x, &y);
    assert!((fit.slope - b).abs() < 1e-9);
    assert!((fit.intercept - a).abs() < 1e-6);
}

#[test]
fn zipf_population_has_the_planted_tail() {
    let spec = PopulationSpec {
        seed: 5,
        n_persons: 8000,
        n_orgs: 1500,
        tail_exponent: 1.5,
        ..PopulationSpec::default()
    };
    let corpus = random_population(&spec).unwrap();
    let ccdf = employment_ccdf(&corpus);
    let orgs = 1500.0;
    // Fit the tail: counts of at least 5 with at least 5 organizations.
    let (x, y): (Vec<f64>, Vec<f64>) = ccdf
        .iter()
        .filter(|&&(c, f)| c >= 5 && f * orgs >= 5.0)
        .map(|&(c, f)| ((c as f64).ln(), f.ln()))
        .unzip();
    let (_, slope) = common::least_squares(&x, &y);
    assert!((slope + 1.5).abs() < 0.2, "slope {slope}");
}
