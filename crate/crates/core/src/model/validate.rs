use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use super::*;

/// One broken invariant, naming the type, field, and offending id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub type_name: &'static str,
    pub field: &'static str,
    pub id: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}.{} [{}]: {}",
            self.type_name, self.field, self.id, self.message
        )
    }
}

struct Report(Vec<Violation>);

impl Report {
    fn push(&mut self, type_name: &'static str, field: &'static str, id: &str, message: String) {
        self.0.push(Violation {
            type_name,
            field,
            id: id.to_string(),
            message,
        });
    }
}

/// Edit-event kind implied by a commit's per-file origins.
pub(crate) fn dominant_edit_kind<'a>(origins: impl IntoIterator<Item = &'a Origin>) -> EventKind {
    let mut kind = EventKind::HumanEdit;
    for origin in origins {
        match origin {
            Origin::Copilot => return EventKind::CopilotEdit,
            Origin::ExternalSuspected => kind = EventKind::ExternalEdit,
            Origin::Human => {}
        }
    }
    kind
}

/// Check every type invariant of an exported timeline. Never fails; an empty
/// list means the document is well formed.
pub fn validate_timeline(t: &Timeline) -> Vec<Violation> {
    let mut r = Report(Vec::new());
    let uid = t.user.as_str();

    if t.schema_version < 1 {
        r.push(
            "Timeline",
            "schema_version",
            uid,
            format!("must be >= 1, got {}", t.schema_version),
        );
    }
    if !t.user.is_valid() {
        r.push(
            "UserRef",
            "user_hash",
            uid,
            "not 64 lowercase hex characters".into(),
        );
    }
    let cfg = &t.attribution_config;
    if let Err(e) = cfg.check() {
        r.push("AttributionConfig", "thresholds", uid, e.to_string());
    }

    // Chat sessions and requests.
    let mut request_ids: BTreeMap<&str, &ChatRequest> = BTreeMap::new();
    let mut session_ids = BTreeSet::new();
    for session in &t.sessions {
        let sid = session.session_id.as_str();
        if !session_ids.insert(sid) {
            r.push(
                "ChatSession",
                "session_id",
                sid,
                "duplicate session id".into(),
            );
        }
        if session.user != t.user {
            r.push(
                "ChatSession",
                "user",
                sid,
                "belongs to a different user".into(),
            );
        }
        for pair in session.requests.windows(2) {
            if pair[1].timestamp_ms < pair[0].timestamp_ms {
                r.push(
                    "ChatSession",
                    "requests",
                    sid,
                    format!(
                        "request {} precedes its predecessor in time",
                        pair[1].request_id
                    ),
                );
            }
        }
        for req in &session.requests {
            let rid = req.request_id.as_str();
            if request_ids.insert(rid, req).is_some() {
                r.push(
                    "ChatRequest",
                    "request_id",
                    rid,
                    "duplicate request id".into(),
                );
            }
            for teg in &req.text_edit_groups {
                if teg.request_id != req.request_id {
                    r.push(
                        "TextEditGroup",
                        "request_id",
                        rid,
                        format!("back-reference is {:?}", teg.request_id),
                    );
                }
                if !is_relative_path(&teg.file_path) {
                    r.push(
                        "TextEditGroup",
                        "file_path",
                        rid,
                        format!("not relative: {:?}", teg.file_path),
                    );
                }
            }
            for call in &req.tool_calls {
                if call.exit_code.is_some() && !call.is_terminal() {
                    r.push(
                        "ToolCall",
                        "exit_code",
                        rid,
                        format!("exit code on non-terminal tool {:?}", call.tool_name),
                    );
                }
            }
        }
    }

    // Commits and diffs.
    let mut commits: BTreeMap<&str, &ShadowCommit> = BTreeMap::new();
    for commit in &t.commits {
        let cid = commit.commit_id.as_str();
        if commits.insert(cid, commit).is_some() {
            r.push(
                "ShadowCommit",
                "commit_id",
                cid,
                "duplicate commit id".into(),
            );
        }
        if commit.user != t.user {
            r.push(
                "ShadowCommit",
                "user",
                cid,
                "belongs to a different user".into(),
            );
        }
        let is_rename = commit.kind == CommitKind::Rename;
        if is_rename && (commit.rename_from.is_none() || commit.rename_to.is_none()) {
            r.push(
                "ShadowCommit",
                "rename_from",
                cid,
                "rename commit without both paths".into(),
            );
        }
        if !is_rename && (commit.rename_from.is_some() || commit.rename_to.is_some()) {
            r.push(
                "ShadowCommit",
                "rename_to",
                cid,
                "rename paths on a non-rename commit".into(),
            );
        }
        for diff in &commit.file_diffs {
            if !is_relative_path(&diff.file_path) {
                r.push(
                    "FileDiff",
                    "file_path",
                    cid,
                    format!("not relative: {:?}", diff.file_path),
                );
            }
            if !diff.binary && diff.net_new_chars != diff.expected_net_new_chars() {
                r.push(
                    "FileDiff",
                    "net_new_chars",
                    cid,
                    format!(
                        "{} for {} but lines imply {}",
                        diff.net_new_chars,
                        diff.file_path,
                        diff.expected_net_new_chars()
                    ),
                );
            }
        }
    }

    // Attributions.
    let mut by_commit: BTreeMap<&str, Vec<&Attribution>> = BTreeMap::new();
    let window_s = cfg.window_s;
    for a in &t.attributions {
        let aid = format!("{}:{}", a.commit_id, a.file_path);
        match commits.get(a.commit_id.as_str()) {
            None => r.push("Attribution", "commit_id", &aid, "unknown commit".into()),
            Some(c) => {
                if !c.file_diffs.iter().any(|d| d.file_path == a.file_path) {
                    r.push(
                        "Attribution",
                        "file_path",
                        &aid,
                        "commit has no diff for this file".into(),
                    );
                }
            }
        }
        by_commit.entry(a.commit_id.as_str()).or_default().push(a);

        if !(0.0..=1.0).contains(&a.match_score) || a.match_score.is_nan() {
            r.push(
                "Attribution",
                "match_score",
                &aid,
                format!("{} outside [0,1]", a.match_score),
            );
        }
        let matched = matches!(a.match_class, MatchClass::Full | MatchClass::Partial);
        if (a.origin == Origin::Copilot) != matched || matched != a.matched_request_id.is_some() {
            r.push(
                "Attribution",
                "origin",
                &aid,
                format!(
                    "origin {:?}, class {:?}, request {:?} disagree",
                    a.origin, a.match_class, a.matched_request_id
                ),
            );
        }
        match a.match_class {
            MatchClass::Full if a.match_score < cfg.full_threshold => r.push(
                "Attribution",
                "match_score",
                &aid,
                format!("full match with score {}", a.match_score),
            ),
            MatchClass::Partial
                if a.match_score < cfg.partial_threshold || a.match_score >= cfg.full_threshold =>
            {
                r.push(
                    "Attribution",
                    "match_score",
                    &aid,
                    format!(
                        "partial match with score {} outside partial band",
                        a.match_score
                    ),
                )
            }
            _ => {}
        }
        if a.time_delta_s.is_some() != a.matched_request_id.is_some() {
            r.push(
                "Attribution",
                "time_delta_s",
                &aid,
                "present iff a request is matched".into(),
            );
        }
        if let Some(dt) = a.time_delta_s {
            if !(0.0..=window_s).contains(&dt) {
                r.push(
                    "Attribution",
                    "time_delta_s",
                    &aid,
                    format!("{dt} s outside [0, {window_s}]"),
                );
            }
        }
        if let Some(req) = &a.matched_request_id {
            if !request_ids.contains_key(req.as_str()) {
                r.push(
                    "Attribution",
                    "matched_request_id",
                    &aid,
                    format!("unknown request {req}"),
                );
            }
        }
    }

    // Events.
    for pair in t.events.windows(2) {
        if event_order(&pair[0], &pair[1]) == std::cmp::Ordering::Greater {
            r.push(
                "Timeline",
                "events",
                &pair[1].event_id,
                format!("out of order after {}", pair[0].event_id),
            );
        }
    }
    let mut edit_events: BTreeMap<&str, usize> = BTreeMap::new();
    let mut prompt_events: BTreeMap<&str, usize> = BTreeMap::new();
    let mut action_events: BTreeMap<&str, usize> = BTreeMap::new();
    let mut event_ids = BTreeSet::new();
    for e in &t.events {
        let eid = e.event_id.as_str();
        if !event_ids.insert(eid) {
            r.push(
                "TimelineEvent",
                "event_id",
                eid,
                "duplicate event id".into(),
            );
        }
        if e.user != t.user {
            r.push(
                "TimelineEvent",
                "user",
                eid,
                "belongs to a different user".into(),
            );
        }
        let payload = e.payload_ref.as_str();
        if e.kind.is_edit() {
            match commits.get(payload) {
                None => r.push(
                    "TimelineEvent",
                    "payload_ref",
                    eid,
                    format!("unknown commit {payload}"),
                ),
                Some(c) => {
                    if c.timestamp_ms != e.timestamp_ms {
                        r.push(
                            "TimelineEvent",
                            "timestamp_ms",
                            eid,
                            "differs from commit time".into(),
                        );
                    }
                    let origins = by_commit
                        .get(payload)
                        .into_iter()
                        .flatten()
                        .map(|a| &a.origin);
                    let expected = dominant_edit_kind(origins);
                    if expected != e.kind {
                        r.push(
                            "TimelineEvent",
                            "kind",
                            eid,
                            format!("{:?} but attributions imply {:?}", e.kind, expected),
                        );
                    }
                }
            }
            *edit_events.entry(payload).or_default() += 1;
        } else {
            match request_ids.get(payload) {
                None => r.push(
                    "TimelineEvent",
                    "payload_ref",
                    eid,
                    format!("unknown request {payload}"),
                ),
                Some(req) if req.timestamp_ms != e.timestamp_ms => r.push(
                    "TimelineEvent",
                    "timestamp_ms",
                    eid,
                    "differs from request time".into(),
                ),
                Some(_) => {}
            }
            let slot = if e.kind == EventKind::ChatPrompt {
                &mut prompt_events
            } else {
                &mut action_events
            };
            *slot.entry(payload).or_default() += 1;
        }
    }
    for cid in commits.keys() {
        let n = edit_events.get(cid).copied().unwrap_or(0);
        if n != 1 {
            r.push(
                "ShadowCommit",
                "events",
                cid,
                format!("expected 1 edit event, found {n}"),
            );
        }
    }
    for (rid, req) in &request_ids {
        let n = prompt_events.get(rid).copied().unwrap_or(0);
        if n != 1 {
            r.push(
                "ChatRequest",
                "events",
                rid,
                format!("expected 1 prompt event, found {n}"),
            );
        }
        let actions = action_events.get(rid).copied().unwrap_or(0);
        if actions != req.tool_calls.len() {
            r.push(
                "ChatRequest",
                "events",
                rid,
                format!(
                    "expected {} agent action events, found {actions}",
                    req.tool_calls.len()
                ),
            );
        }
    }
    r.0
}
