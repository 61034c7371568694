mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use common::*;
use mipw_core::QualitativeRecord;
use mipw_workbench::records::RecordLog;
use mipw_workbench::run::RECORD_LOG;

fn mipw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mipw")).args(args).output().unwrap()
}

fn ok(out: Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn playback_run(f: &Fixture, out: &Path, cache: &Path) -> PathBuf {
    let stdout = ok(mipw(&[
        "run", "--corpus", s(&f.corpus), "--format", f.format, "--model", MODEL,
        "--backend", "playback", "--fixtures", s(&f.playback),
        "--cache-dir", s(cache), "--out", s(out),
    ]));
    PathBuf::from(stdout.trim())
}

#[test]
fn ingest_reports_counts() {
    let out = ok(mipw(&["ingest", "--corpus", s(&fixture("trofi20.txt")), "--format", "trofi"]));
    assert!(out.contains("nonliteral 10, literal 10"), "{out}");
    let bad = mipw(&["ingest", "--corpus", s(&fixture("trofi20.txt")), "--format", "csv"]);
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("csv"));
}

#[test]
fn run_score_report_export() {
    let tmp = tempfile::tempdir().unwrap();
    let cache = tmp.path().join("cache");
    let run = playback_run(&trofi20(), &tmp.path().join("runs"), &cache);
    assert!(run.join("manifest.json").is_file());

    let scored = ok(mipw(&["score", "--run", s(&run)]));
    assert!(scored.ends_with("gpt-4o,72.73,80.00,77.78,70.00\n"), "{scored}");
    let inverted = ok(mipw(&["score", "--run", s(&run), "--mapping", "yes-literal"]));
    assert!(inverted.contains("true Nonliteral"), "{inverted}");

    let written = ok(mipw(&["report", "--run", s(&run)]));
    assert!(written.lines().any(|l| l.ends_with("_confusion.svg")));
    assert!(run.join("report/metrics.csv").is_file());

    let mwlb = playback_run(&mwlb7(), &tmp.path().join("runs"), &cache);
    let exported = ok(mipw(&["export", "--run", s(&mwlb)]));
    assert!(exported.starts_with("0 record(s), 0 conflict(s)"), "{exported}");
    assert!(mwlb.join("annotations/export/records.tsv").is_file());
    let (mut log, _) = RecordLog::open(&mwlb.join(RECORD_LOG)).unwrap();
    log.append(QualitativeRecord {
        sentence_id: "lj01".into(),
        model_id: MODEL.into(),
        annotator_id: "a".into(),
        lj_identified: true,
        lj_basic_correct: true,
        additional: false,
        additional_metaphorical: None,
        additional_basic_correct: None,
        note: None,
    })
    .unwrap();
    let written = ok(mipw(&["report", "--run", s(&run), "--run", s(&mwlb), "--out", s(&tmp.path().join("rep"))]));
    assert!(written.contains("qualitative.svg"), "{written}");

    // same inputs again: the run directory already exists
    let again = mipw(&[
        "run", "--corpus", s(&fixture("trofi20.txt")), "--format", "trofi", "--model", MODEL,
        "--backend", "playback", "--fixtures", s(&fixture("trofi20_playback.json")),
        "--out", s(&tmp.path().join("runs")),
    ]);
    assert!(!again.status.success());
    assert!(String::from_utf8_lossy(&again.stderr).contains("immutable"));
}

#[test]
fn parse_prints_json() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("resp.txt");
    std::fs::write(&input, "\"Remember\" (verb, NO)\n\"the Alamo\" (phrase, YES: a mission in Texas)").unwrap();
    let out = ok(mipw(&["parse", "--input", s(&input), "--sentence", "Remember the Alamo!"]));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["units"].as_array().unwrap().len(), 2);
    assert_eq!(v["units"][1]["kind"], "phrase");
    assert_eq!(v["coverage"], 1.0);
}

#[test]
fn openai_backend_without_endpoint_fails_cleanly() {
    let tmp = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_mipw"))
        .args([
            "run", "--corpus", s(&fixture("trofi20.txt")), "--format", "trofi", "--model", MODEL,
            "--out", s(tmp.path()),
        ])
        .env_remove("MIPW_API_KEY")
        .env_remove("MIPW_BASE_URL")
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("MIPW_BASE_URL"));
    assert!(std::fs::read_dir(tmp.path()).unwrap().next().is_none());
}
