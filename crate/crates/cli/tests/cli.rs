use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn cotrace(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cotrace"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

fn synth(dir: &Path, extra: &[&str]) -> PathBuf {
    let corpus = dir.join("corpus");
    let mut args = vec!["synth", "--out", path(&corpus)];
    args.extend_from_slice(extra);
    let out = cotrace(&args);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    corpus
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn read_dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

fn timelines(dir: &Path) -> Vec<Value> {
    read_dir_bytes(dir)
        .into_iter()
        .filter(|(name, _)| name.starts_with("timeline_"))
        .map(|(_, bytes)| serde_json::from_slice(&bytes).unwrap())
        .collect()
}

#[test]
fn seed_one_runs_and_validates() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = synth(tmp.path(), &["--seed", "1"]);
    let out_dir = tmp.path().join("out");
    let run = cotrace(&["run", path(&corpus), "--out", path(&out_dir)]);
    assert_eq!(
        run.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    let summary = stdout_json(&run);
    assert_eq!(summary["users"], 1);

    let files: Vec<PathBuf> = fs::read_dir(&out_dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| {
            p.file_name()
                .unwrap()
                .to_string_lossy()
                .starts_with("timeline_")
        })
        .collect();
    assert_eq!(files.len(), 1);
    let mut args = vec!["validate"];
    args.extend(files.iter().map(|p| path(p)));
    let validate = cotrace(&args);
    assert_eq!(validate.status.code(), Some(0));
    assert_eq!(
        stdout_json(&validate)[0]["violations"],
        Value::Array(Vec::new())
    );

    let report: Value =
        serde_json::from_slice(&fs::read(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["schema"], "cotrace-report-v1");
    assert_eq!(report["users"][0]["n_copilot"], 2);
}

#[test]
fn runs_are_byte_identical_across_modes() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = synth(
        tmp.path(),
        &[
            "--seed",
            "3",
            "--users",
            "3",
            "--sessions",
            "2",
            "--prompts",
            "4",
        ],
    );
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let c = tmp.path().join("c");
    assert!(cotrace(&["run", path(&corpus), "--out", path(&a)])
        .status
        .success());
    assert!(cotrace(&["run", path(&corpus), "--out", path(&b)])
        .status
        .success());
    assert!(
        cotrace(&["run", path(&corpus), "--out", path(&c), "--sequential"])
            .status
            .success()
    );
    assert_eq!(read_dir_bytes(&a), read_dir_bytes(&b));
    assert_eq!(read_dir_bytes(&a), read_dir_bytes(&c));
}

#[test]
fn score_is_exact_on_unperturbed_corpus() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = synth(
        tmp.path(),
        &["--seed", "7", "--users", "2", "--prompts", "5", "--bundle"],
    );
    let out = cotrace(&["score", path(&corpus)]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let score = stdout_json(&out);
    assert_eq!(score["n_entries"], score["n_correct"]);
    assert_eq!(score["per_origin"]["copilot"]["precision"], 1.0);
    assert_eq!(score["per_origin"]["copilot"]["recall"], 1.0);
}

#[test]
fn empty_corpus_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    fs::create_dir_all(tmp.path().join("chats")).unwrap();
    fs::create_dir_all(tmp.path().join("shadow")).unwrap();
    let out = cotrace(&[
        "run",
        path(tmp.path()),
        "--out",
        path(&tmp.path().join("out")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(cotrace(&["run"]).status.code(), Some(2));
    assert_eq!(cotrace(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        cotrace(&["run", ".", "--out", "x", "--classifier", "magic"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn corrupt_chat_is_a_warning() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = synth(tmp.path(), &["--seed", "2"]);
    fs::write(
        corpus.join("chats").join("zz-broken.json"),
        "{\"schema\": \"recap-ch",
    )
    .unwrap();
    let out = cotrace(&["run", path(&corpus), "--out", path(&tmp.path().join("out"))]);
    assert_eq!(out.status.code(), Some(0));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr
            .lines()
            .any(|l| l.starts_with("warning:") && l.contains("zz-broken.json")),
        "{stderr}"
    );
}

#[test]
fn missing_chats_gives_only_edit_events() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = synth(tmp.path(), &["--seed", "4", "--prompts", "4"]);
    fs::remove_dir_all(corpus.join("chats")).unwrap();
    let out_dir = tmp.path().join("out");
    let out = cotrace(&["run", path(&corpus), "--out", path(&out_dir)]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let all = timelines(&out_dir);
    assert_eq!(all.len(), 1);
    let events = all[0]["events"].as_array().unwrap();
    assert!(!events.is_empty());
    assert!(
        events.iter().all(|e| e["kind"] == "human_edit"),
        "{events:?}"
    );
}

#[test]
fn overview_sorts_users_by_ai_share() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = synth(
        tmp.path(),
        &[
            "--seed",
            "5",
            "--users",
            "4",
            "--prompts",
            "6",
            "--p-accept",
            "0.5",
        ],
    );
    let out_dir = tmp.path().join("out");
    assert!(cotrace(&["run", path(&corpus), "--out", path(&out_dir)])
        .status
        .success());
    let report: Value =
        serde_json::from_slice(&fs::read(out_dir.join("report.json")).unwrap()).unwrap();
    let shares: Vec<f64> = report["overview"]["per_user"]
        .as_array()
        .unwrap()
        .iter()
        .map(|u| u["ai_edit_share_overall"].as_f64().unwrap())
        .collect();
    assert_eq!(shares.len(), 4);
    assert!(shares.windows(2).all(|w| w[0] >= w[1]), "{shares:?}");
}

#[test]
fn validate_flags_a_tampered_timeline() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = synth(tmp.path(), &["--seed", "1"]);
    let out_dir = tmp.path().join("out");
    assert!(cotrace(&["run", path(&corpus), "--out", path(&out_dir)])
        .status
        .success());
    let mut t = timelines(&out_dir).remove(0);
    t["events"].as_array_mut().unwrap().reverse();
    let tampered = tmp.path().join("tampered.json");
    fs::write(&tampered, serde_json::to_vec(&t).unwrap()).unwrap();
    let out = cotrace(&["validate", path(&tampered)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!stdout_json(&out)[0]["violations"]
        .as_array()
        .unwrap()
        .is_empty());
}

#[test]
fn synth_refuses_a_non_empty_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = synth(tmp.path(), &[]);
    let again = cotrace(&["synth", "--out", path(&corpus)]);
    assert_eq!(again.status.code(), Some(1));
}
