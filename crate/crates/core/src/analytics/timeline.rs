use std::collections::{BTreeMap, BTreeSet};

use crate::attribution::AttributionConfig;
use crate::error::{Error, Result};
use crate::model::validate::dominant_edit_kind;
use crate::model::{
    event_order, Attribution, ChatSession, EventKind, ExtraFields, ShadowCommit, Timeline,
    TimelineEvent, UserRef, TIMELINE_SCHEMA_VERSION,
};

/// Merge one user's commits and chat requests into a single ordered
/// timeline. Fails when an attribution names a commit that is not present.
pub fn build_timeline(
    user: &UserRef,
    commits: &[ShadowCommit],
    attributions: &[Attribution],
    sessions: &[ChatSession],
    config: &AttributionConfig,
) -> Result<Timeline> {
    let known: BTreeSet<&str> = commits.iter().map(|c| c.commit_id.as_str()).collect();
    let mut by_commit: BTreeMap<&str, Vec<&Attribution>> = BTreeMap::new();
    for a in attributions {
        if !known.contains(a.commit_id.as_str()) {
            return Err(Error::Consistency(format!(
                "attribution for {} references unknown commit {}",
                a.file_path, a.commit_id
            )));
        }
        by_commit.entry(a.commit_id.as_str()).or_default().push(a);
    }

    let mut events = Vec::new();
    for commit in commits {
        let origins = by_commit
            .get(commit.commit_id.as_str())
            .into_iter()
            .flatten()
            .map(|a| &a.origin);
        events.push(TimelineEvent {
            event_id: format!("commit:{}", commit.commit_id),
            user: user.clone(),
            timestamp_ms: commit.timestamp_ms,
            kind: dominant_edit_kind(origins),
            payload_ref: commit.commit_id.clone(),
            extra: ExtraFields::new(),
        });
    }
    for request in sessions.iter().flat_map(|s| &s.requests) {
        events.push(TimelineEvent {
            event_id: format!("prompt:{}", request.request_id),
            user: user.clone(),
            timestamp_ms: request.timestamp_ms,
            kind: EventKind::ChatPrompt,
            payload_ref: request.request_id.clone(),
            extra: ExtraFields::new(),
        });
        for i in 0..request.tool_calls.len() {
            events.push(TimelineEvent {
                event_id: format!("action:{}:{i:04}", request.request_id),
                user: user.clone(),
                timestamp_ms: request.timestamp_ms,
                kind: EventKind::AgentAction,
                payload_ref: request.request_id.clone(),
                extra: ExtraFields::new(),
            });
        }
    }
    events.sort_by(event_order);

    let mut commits = commits.to_vec();
    commits.sort_by_key(|c| c.seq);

    Ok(Timeline {
        schema_version: TIMELINE_SCHEMA_VERSION,
        user: user.clone(),
        attribution_config: config.clone(),
        events,
        attributions: attributions.to_vec(),
        sessions: sessions.to_vec(),
        commits,
        extra: ExtraFields::new(),
    })
}
