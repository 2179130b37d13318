use std::path::Path;
use std::process::{Command, Output};

fn careerflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_careerflow"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = careerflow(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn scenario_r3_ranking_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["synth", "--scenario", "four-org", "--out", path(dir.path())]);
    let records = dir.path().join("records.csv");
    let rules = dir.path().join("rules.csv");
    assert_eq!(
        std::fs::read_to_string(&records).unwrap(),
        include_str!("golden/four_org_records.csv")
    );
    let args = |transform: &'static str| {
        vec![
            "rank",
            "--input",
            path(&records),
            "--rules",
            path(&rules),
            "--horizon",
            "2010",
            "--from",
            "2006",
            "--to",
            "2010",
            "--window",
            "5",
            "--step",
            "5",
            "--transform",
            transform,
        ]
    };
    let r3 = ok(&args("r3"));
    assert_eq!(
        String::from_utf8(r3.stdout).unwrap(),
        include_str!("golden/four_org_rank_r3.csv")
    );
    let gf = ok(&args("none"));
    assert_eq!(
        String::from_utf8(gf.stdout).unwrap(),
        include_str!("golden/four_org_rank_gf.csv")
    );
}

#[test]
fn malformed_row_is_reported_and_skipped() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/malformed.csv");
    let out = ok(&["ingest", "--input", fixture, "--out", path(dir.path())]);
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert_eq!(stderr.lines().count(), 1, "{stderr}");
    assert!(stderr.contains("line 6"));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("persons=3 spells=5"), "{stdout}");
    let orgs = std::fs::read_to_string(dir.path().join("organizations.csv")).unwrap();
    assert!(orgs.contains("sandia national laboratories,government"));
}

#[test]
fn unknown_flag_is_rejected() {
    let out = careerflow(&["rank", "--no-such-flag"]);
    assert!(!out.status.success());
    assert!(!out.stderr.is_empty());
}

#[test]
fn missing_input_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.csv");
    let out = careerflow(&["network", "--input", path(&missing), "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
}

fn synth_small(dir: &Path) -> String {
    ok(&[
        "synth",
        "--random",
        "--seed",
        "1",
        "--persons",
        "150",
        "--orgs",
        "20",
        "--planted-signal",
        "--out",
        path(dir),
    ]);
    path(&dir.join("records.csv")).to_string()
}

#[test]
fn predict_is_reproducible_with_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let records = synth_small(dir.path());
    let run = |name: &str| {
        let out = dir.path().join(name);
        ok(&[
            "predict",
            "--input",
            &records,
            "--n",
            "1",
            "--years",
            "2005-2010",
            "--groups",
            "ind,ind+r3",
            "--folds",
            "3",
            "--seed",
            "7",
            "--out",
            path(&out),
        ]);
        (
            std::fs::read(out.join("metrics.csv")).unwrap(),
            std::fs::read(out.join("dataset.csv")).unwrap(),
        )
    };
    let first = run("a");
    assert_eq!(first, run("b"));
    let metrics = String::from_utf8(first.0).unwrap();
    assert!(metrics.starts_with("config,n,metric,mean,std\n"));
    assert!(metrics.contains("IND+R3,1,features,30,0"));
}

#[test]
fn analyze_writes_every_table() {
    let dir = tempfile::tempdir().unwrap();
    let records = synth_small(dir.path());
    let out = dir.path().join("analysis");
    ok(&["analyze", "--input", &records, "--out", path(&out)]);
    for name in [
        "cross_sector.csv",
        "soft_trend.csv",
        "retention.csv",
        "ccdf.csv",
        "summary.csv",
    ] {
        let body = std::fs::read_to_string(out.join(name)).unwrap();
        assert!(body.lines().count() > 1, "{name} is empty");
    }
}

#[test]
fn network_and_outliers_run_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let records = synth_small(dir.path());
    let net = dir.path().join("net");
    ok(&["network", "--input", &records, "--out", path(&net)]);
    let edges = std::fs::read_to_string(net.join("edges.csv")).unwrap();
    assert!(edges.lines().count() > 1);
    let out = ok(&[
        "outliers", "--input", &records, "--top-k", "3", "--from", "2000", "--to", "2014",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("window_start,window_end,org,residual"));
}
