use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn kickrec(config: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kickrec"))
        .arg("--config")
        .arg(config)
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("spawn kickrec")
}

fn ok(config: &Path, args: &[&str]) {
    let out = kickrec(config, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn write_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("run.toml");
    let text = format!(
        r#"seed = 5

[paths]
work_dir = "{}"

[gen]
n_projects = 150
n_investors = 500
calibration_samples = 5000

[lda]
topics = 13
iterations = 30

[pairs]
max_positives = 300

[eval]
model = "lr"
folds = 3

[rank]
projects_per_fold = 3
max_pool = 100
"#,
        dir.join("work").display()
    );
    fs::write(&path, text).unwrap();
    path
}

fn run_all(dir: &Path) {
    let cfg = write_config(dir);
    for stage in ["gen", "ingest", "link", "topics", "features", "train", "evaluate", "rank", "analyze"] {
        ok(&cfg, &[stage]);
    }
}

#[test]
fn full_pipeline_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_all(a.path());
    run_all(b.path());
    let work = |d: &Path| d.join("work");
    for file in [
        "corpus/projects.jsonl",
        "corpus/ground_truth.json",
        "ingested/ingest_report.txt",
        "links.csv",
        "topics.lda",
        "features.csv",
        "model.txt",
        "reports/eval.csv",
        "reports/rank.csv",
        "reports/hypotheses.txt",
        "reports/curve_goal.csv",
    ] {
        let x = fs::read(work(a.path()).join(file)).unwrap_or_else(|e| panic!("{file}: {e}"));
        let y = fs::read(work(b.path()).join(file)).unwrap();
        assert_eq!(x, y, "{file} differs between runs");
    }
    let eval = fs::read_to_string(work(a.path()).join("reports/eval.csv")).unwrap();
    assert!(eval.lines().count() >= 3, "{eval}");
    let rank = fs::read_to_string(work(a.path()).join("reports/rank.csv")).unwrap();
    assert!(rank.contains("random"));
}

#[test]
fn missing_model_file_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let missing = dir.path().join("nope.txt");
    let out = kickrec(&cfg, &["evaluate", "--model-file", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("error: model file not found"), "{err}");
    assert!(err.contains("nope.txt"));
}

#[test]
fn bad_config_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[model]\nunknown_knob = 1\n").unwrap();
    let out = kickrec(&cfg, &["gen"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown_knob"));
    let out = kickrec(&dir.path().join("absent.toml"), &["gen"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("config file"));
}

#[test]
fn stage_without_inputs_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out = kickrec(&cfg, &["link"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: "));
}
