use std::fs;
use std::path::Path;

use cotrace_core::chat::{ingest_chats, ingest_chats_with, IngestConfig};
use cotrace_core::model::{SourceFormat, UserRef};
use cotrace_core::Exec;
use proptest::prelude::*;
use serde_json::json;

fn session_json(session_id: &str, user: &str, requests: &[(&str, i64, &str)]) -> String {
    let requests: Vec<_> = requests
        .iter()
        .map(|(id, ts, prompt)| {
            json!({
                "request_id": id,
                "timestamp_ms": ts,
                "prompt": prompt,
                "model": "gpt-4o",
                "response": "ok",
                "tool_calls": [{"tool": "run_in_terminal", "args": "pytest", "exit_code": 1}],
                "text_edit_groups": [{"file_path": "app/a.py", "lines": ["x = 1"]}]
            })
        })
        .collect();
    serde_json::to_string_pretty(&json!({
        "schema": "recap-chat-v1",
        "session_id": session_id,
        "user_hash": UserRef::from_raw(user).as_str(),
        "requests": requests,
    }))
    .unwrap()
}

fn two_sessions(dir: &Path) {
    fs::write(
        dir.join("s1.json"),
        session_json(
            "s1",
            "alice",
            &[
                ("r1", 1_000, "yes"),
                ("r2", 2_000, "Explain this\ttraceback  "),
            ],
        ),
    )
    .unwrap();
    fs::write(
        dir.join("s2.json"),
        session_json(
            "s2",
            "bob",
            &[
                ("r3", 500, "Add a button"),
                ("r4", 900, "ok thanks!"),
                ("r5", 1_500, "Переименуй функцию"),
            ],
        ),
    )
    .unwrap();
}

#[test]
fn two_files_five_requests() {
    let tmp = tempfile::tempdir().unwrap();
    two_sessions(tmp.path());
    let (sessions, report) = ingest_chats(tmp.path(), &IngestConfig::default()).unwrap();
    assert_eq!(sessions.len(), 2);
    assert_eq!(report.requests_total, 5);
    assert_eq!(report.files_seen, 2);
    assert!(report.warnings.is_empty(), "{:?}", report.warnings);
    assert_eq!(report.trivial_prompts_excluded, 2);
    // Sorted by first request timestamp.
    assert_eq!(sessions[0].session_id, "s2");
    assert_eq!(sessions[0].source_format, SourceFormat::RecapV1);
    let r2 = &sessions[1].requests[1];
    assert_eq!(r2.prompt_text, "Explain this\ttraceback  ");
    assert_eq!(sessions[0].requests[2].prompt_text, "Переименуй функцию");
    assert_eq!(r2.tool_calls[0].exit_code, Some(1));
    assert_eq!(r2.text_edit_groups[0].request_id, "r2");
}

#[test]
fn empty_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let (sessions, report) = ingest_chats(tmp.path(), &IngestConfig::default()).unwrap();
    assert!(sessions.is_empty());
    assert_eq!(report.files_seen, 0);
}

#[test]
fn truncated_file_becomes_a_warning() {
    let tmp = tempfile::tempdir().unwrap();
    let good = session_json(
        "s1",
        "alice",
        &[("r1", 1_000, "hello there, explain closures")],
    );
    fs::write(tmp.path().join("good.json"), &good).unwrap();
    fs::write(tmp.path().join("broken.json"), &good.as_bytes()[..20]).unwrap();
    let (sessions, report) = ingest_chats(tmp.path(), &IngestConfig::default()).unwrap();
    assert_eq!(sessions.len(), 1);
    assert_eq!(report.warnings.len(), 1);
    assert!(
        report.warnings[0].contains("broken.json"),
        "{}",
        report.warnings[0]
    );
}

#[test]
fn missing_directory_is_fatal() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(ingest_chats(&tmp.path().join("absent"), &IngestConfig::default()).is_err());
}

#[test]
fn bad_user_hash_and_duplicates_warn() {
    let tmp = tempfile::tempdir().unwrap();
    let mut bad: serde_json::Value = serde_json::from_str(&session_json(
        "s9",
        "carol",
        &[("r1", 5, "Explain generics")],
    ))
    .unwrap();
    bad["user_hash"] = json!("carol");
    fs::write(tmp.path().join("bad.json"), bad.to_string()).unwrap();
    let s = session_json("dup", "dave", &[("r1", 5, "Explain generics")]);
    fs::write(tmp.path().join("a.json"), &s).unwrap();
    fs::write(tmp.path().join("b.json"), &s).unwrap();
    let (sessions, report) = ingest_chats(tmp.path(), &IngestConfig::default()).unwrap();
    assert_eq!(sessions.len(), 1);
    assert_eq!(report.warnings.len(), 2, "{:?}", report.warnings);
}

fn ingest_with_names(order: &[usize], exec: Exec) -> Vec<cotrace_core::model::ChatSession> {
    let tmp = tempfile::tempdir().unwrap();
    for (slot, &i) in order.iter().enumerate() {
        let id = format!("s{i}");
        let ts = (i as i64 % 2) * 100;
        let body = session_json(
            &id,
            &format!("user{}", i % 3),
            &[("r", ts, "Explain traits")],
        );
        fs::write(tmp.path().join(format!("{slot:02}.json")), body).unwrap();
    }
    ingest_chats_with(tmp.path(), &IngestConfig::default(), exec)
        .unwrap()
        .0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ingestion_ignores_listing_order(order in Just((0..6usize).collect::<Vec<_>>()).prop_shuffle(), parallel in any::<bool>()) {
        let exec = if parallel { Exec::Parallel } else { Exec::Sequential };
        let baseline = ingest_with_names(&[0, 1, 2, 3, 4, 5], Exec::Sequential);
        prop_assert_eq!(baseline.len(), 6);
        prop_assert_eq!(ingest_with_names(&order, exec), baseline);
    }
}
