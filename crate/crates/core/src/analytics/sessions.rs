use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::model::{EventKind, Timeline, TimestampMs, UserRef};

/// Default inactivity gap separating work sessions: 30 minutes.
pub const DEFAULT_GAP_MS: i64 = 30 * 60 * 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkSession {
    pub user: UserRef,
    /// 1-based, chronological per user.
    pub index: u32,
    pub start_ms: TimestampMs,
    pub end_ms: TimestampMs,
    pub n_human: u32,
    pub n_copilot: u32,
    pub n_external: u32,
    pub n_prompts: u32,
    pub n_events: u32,
    pub ai_edit_share: Option<f64>,
}

impl WorkSession {
    pub fn n_edits(&self) -> u32 {
        self.n_human + self.n_copilot + self.n_external
    }
}

/// Split a timeline into maximal runs of events with no gap longer than
/// `gap_ms`. Trivial prompts are not counted in `n_prompts`.
pub fn segment_sessions(timeline: &Timeline, gap_ms: i64) -> Vec<WorkSession> {
    let trivial: HashSet<&str> = timeline
        .sessions
        .iter()
        .flat_map(|s| &s.requests)
        .filter(|r| r.is_trivial)
        .map(|r| r.request_id.as_str())
        .collect();

    let mut out: Vec<WorkSession> = Vec::new();
    let mut last_ts: Option<TimestampMs> = None;
    for event in &timeline.events {
        let starts_new = last_ts.is_none_or(|prev| event.timestamp_ms - prev > gap_ms);
        if starts_new {
            out.push(WorkSession {
                user: timeline.user.clone(),
                index: out.len() as u32 + 1,
                start_ms: event.timestamp_ms,
                end_ms: event.timestamp_ms,
                n_human: 0,
                n_copilot: 0,
                n_external: 0,
                n_prompts: 0,
                n_events: 0,
                ai_edit_share: None,
            });
        }
        let session = out.last_mut().expect("session opened above");
        session.end_ms = session.end_ms.max(event.timestamp_ms);
        session.n_events += 1;
        match event.kind {
            EventKind::HumanEdit => session.n_human += 1,
            EventKind::CopilotEdit => session.n_copilot += 1,
            EventKind::ExternalEdit => session.n_external += 1,
            EventKind::ChatPrompt if !trivial.contains(event.payload_ref.as_str()) => {
                session.n_prompts += 1
            }
            EventKind::ChatPrompt | EventKind::AgentAction => {}
        }
        last_ts = Some(event.timestamp_ms);
    }
    for s in &mut out {
        let edits = s.n_edits();
        s.ai_edit_share = (edits > 0).then(|| s.n_copilot as f64 / edits as f64);
    }
    out
}
