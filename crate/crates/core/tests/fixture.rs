use std::fs;
use std::path::{Path, PathBuf};

use kickrec::domain::{parse_timestamp, InvestorId, ProjectId};
use kickrec::error::Error;
use kickrec::features::*;
use kickrec::ingest::{dump_corpus, load_corpus, CorpusPaths};
use kickrec::link::Confidence;
use kickrec::pipeline;
use kickrec::topics::LdaConfig;

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/tiny")
}

fn copy_fixture() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    for entry in fs::read_dir(fixture()).unwrap() {
        let entry = entry.unwrap();
        fs::copy(entry.path(), dir.path().join(entry.file_name())).unwrap();
    }
    dir
}

fn pid(s: &str) -> ProjectId {
    ProjectId(s.into())
}

fn iid(s: &str) -> InvestorId {
    InvestorId(s.into())
}

#[test]
fn loads_and_reports() {
    let (corpus, report) = load_corpus(&CorpusPaths::in_dir(fixture())).unwrap();
    assert_eq!((report.projects, report.investors, report.pledges), (2, 4, 5));
    assert_eq!(report.tweet_matches.matched, 3);
    assert_eq!(report.tweet_matches.unmatched, 1);
    assert!(report.warnings.iter().any(|w| w.contains("Atlantis")));
    assert!(corpus.investor(&iid("u4")).unwrap().location.is_none());
    let matched: Vec<_> = corpus.tweets.iter().map(|t| t.matched_project_id.clone()).collect();
    assert_eq!(matched, vec![Some(pid("p1")), Some(pid("p1")), Some(pid("p2")), None]);
    let order: Vec<_> = corpus.backings(&pid("p1")).iter().map(|b| b.investor_id.0.as_str()).collect();
    assert_eq!(order, ["u1", "u2", "u3"]);
}

#[test]
fn normalized_dump_round_trips() {
    let (corpus, _) = load_corpus(&CorpusPaths::in_dir(fixture())).unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    dump_corpus(&corpus, a.path()).unwrap();
    let (again, _) = load_corpus(&CorpusPaths::in_dir(a.path())).unwrap();
    assert_eq!(again.projects, corpus.projects);
    assert_eq!(again.investors, corpus.investors);
    assert_eq!(again.tweets, corpus.tweets);
    dump_corpus(&again, b.path()).unwrap();
    for name in ["projects.jsonl", "investors.jsonl", "pledges.jsonl", "tweets.jsonl", "geocode.csv"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn links_by_normalized_name() {
    let (corpus, _) = load_corpus(&CorpusPaths::in_dir(fixture())).unwrap();
    let (linked, report) = pipeline::link(&corpus).unwrap();
    let got: Vec<_> = report.links.iter().map(|l| (l.investor_id.0.as_str(), l.handle.as_str(), l.confidence)).collect();
    assert_eq!(got, [("u1", "ada_l", Confidence::Exact), ("u2", "ghopper", Confidence::Exact)]);
    assert_eq!(report.links[0].project_context_id, pid("p1"));
    assert_eq!(pipeline::linked_investors(&linked), [iid("u1"), iid("u2")]);
}

#[test]
fn pair_features_by_hand() {
    let (corpus, _) = load_corpus(&CorpusPaths::in_dir(fixture())).unwrap();
    let (linked, _) = pipeline::link(&corpus).unwrap();
    let lda = LdaConfig { topics: 2, iterations: 20, min_count: 1, ..Default::default() };
    let model = pipeline::fit_topics(&linked, &lda).unwrap();
    let topics = pipeline::topic_index(&linked, &model, &lda);
    let pairs = positive_pairs(&linked, [iid("u3"), iid("u1")].iter());
    let m = build_pair_features(&linked, &topics, &pairs, DEFAULT_GROWTH_WINDOW).unwrap();

    let u3 = m.rows.iter().find(|r| r.pair.investor_id == iid("u3")).unwrap();
    assert_eq!(u3.pair.cutoff, parse_timestamp("2013-08-10T00:00:00Z").unwrap());
    let v = &u3.values;
    let la_ny = 3935.746;
    assert!((v[GEO_DISPERSION].unwrap() - la_ny / 2.0).abs() < 5.0, "{:?}", v[GEO_DISPERSION]);
    assert!((v[UPDATE_COUNT_LOG].unwrap() - 2f64.ln()).abs() < 1e-12);
    assert!((v[COMMENT_COUNT_LOG].unwrap() - 3f64.ln()).abs() < 1e-12);
    assert!((v[GROWTH_RATE].unwrap() - 400.0 / (1000.0 * 4.5)).abs() < 1e-9);
    assert!((v[GOAL_LOG].unwrap() - 1001f64.ln()).abs() < 1e-12);
    assert_eq!(v[HAS_WEBSITE], Some(1.0));
    assert_eq!(v[CATEGORY_MATCH], None);
    assert_eq!(v[TWITTER_ACTIVITY], None);
    assert!(v[TOPIC_SIMILARITY].is_none());

    let u1_p2 = m.rows.iter().find(|r| r.pair.investor_id == iid("u1") && r.pair.project_id == pid("p2")).unwrap();
    assert_eq!(u1_p2.values[CATEGORY_MATCH], Some(0.0));
    assert!(u1_p2.values[TWITTER_ACTIVITY].is_some());
    let sim = u1_p2.values[TOPIC_SIMILARITY].unwrap();
    assert!((0.0..=1.0 + 1e-12).contains(&sim));
    assert_eq!(u1_p2.values[GEO_DISPERSION], None);
}

fn expect_err(dir: &Path, check: impl Fn(&Error) -> bool) {
    match load_corpus(&CorpusPaths::in_dir(dir)) {
        Ok(_) => panic!("corrupted corpus loaded"),
        Err(e) => assert!(check(&e), "unexpected error: {e}"),
    }
}

#[test]
fn missing_file_is_named() {
    let dir = copy_fixture();
    fs::remove_file(dir.path().join("geocode.csv")).unwrap();
    expect_err(dir.path(), |e| matches!(e, Error::MissingInput("geocode table", _)));
}

#[test]
fn dangling_pledge_is_rejected() {
    let dir = copy_fixture();
    let path = dir.path().join("pledges.jsonl");
    let mut text = fs::read_to_string(&path).unwrap();
    text.push_str("{\"investor_id\":\"u1\",\"project_id\":\"p9\",\"time\":\"2013-08-05T00:00:00Z\"}\n");
    fs::write(&path, text).unwrap();
    expect_err(dir.path(), |e| matches!(e, Error::Dangling { kind: "project_id", to, .. } if to == "p9"));
}

#[test]
fn unknown_category_is_rejected() {
    let dir = copy_fixture();
    let path = dir.path().join("projects.jsonl");
    let text = fs::read_to_string(&path).unwrap().replace("\"Comics\"", "\"Knitting\"");
    fs::write(&path, text).unwrap();
    expect_err(dir.path(), |e| matches!(e, Error::UnknownCategory(c) if c == "Knitting"));
}

#[test]
fn bad_timestamp_reports_line() {
    let dir = copy_fixture();
    let path = dir.path().join("tweets.jsonl");
    let text = fs::read_to_string(&path).unwrap().replace("2013-08-05T01:00:00Z", "yesterday");
    fs::write(&path, text).unwrap();
    expect_err(dir.path(), |e| matches!(e, Error::Malformed { line: 3, .. }));
}

#[test]
fn outcome_must_agree_with_series() {
    let dir = copy_fixture();
    let path = dir.path().join("projects.jsonl");
    let text = fs::read_to_string(&path).unwrap().replace("\"failed\"", "\"successful\"");
    fs::write(&path, text).unwrap();
    expect_err(dir.path(), |e| e.to_string().contains("outcome"));
}
