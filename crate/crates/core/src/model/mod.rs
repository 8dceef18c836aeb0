//! Domain types shared by both capture streams and the timeline export.

pub(crate) mod validate;

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::attribution::AttributionConfig;

pub use validate::{validate_timeline, Violation};

/// Current version of the timeline export document.
pub const TIMELINE_SCHEMA_VERSION: u32 = 1;

/// UTC milliseconds since the Unix epoch.
pub type TimestampMs = i64;

/// Unknown JSON fields carried through a read/write cycle.
pub type ExtraFields = BTreeMap<String, serde_json::Value>;

/// SHA-256 digest of a raw user identifier, as 64 lowercase hex characters.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UserRef(String);

impl UserRef {
    /// Hash a raw identifier. The raw value is not retained.
    pub fn from_raw(raw: &str) -> Self {
        let digest = Sha256::digest(raw.as_bytes());
        let mut hex = String::with_capacity(64);
        for byte in digest.iter() {
            hex.push_str(&format!("{byte:02x}"));
        }
        UserRef(hex)
    }

    /// Accept an already-hashed identifier, rejecting anything that is not
    /// 64 lowercase hex digits.
    pub fn parse(hash: &str) -> Option<Self> {
        is_user_hash(hash).then(|| UserRef(hash.to_string()))
    }

    /// Wrap a string without checking it. `validate_timeline` reports bad values.
    pub fn new_unchecked(hash: impl Into<String>) -> Self {
        UserRef(hash.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_valid(&self) -> bool {
        is_user_hash(&self.0)
    }
}

impl fmt::Display for UserRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn is_user_hash(s: &str) -> bool {
    s.len() == 64 && s.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f'))
}

/// True for a workspace-relative, forward-slash path without `..` segments.
pub fn is_relative_path(path: &str) -> bool {
    !path.is_empty()
        && !path.starts_with('/')
        && !path.contains('\\')
        && !(path.len() >= 2 && path.as_bytes()[1] == b':')
        && path.split('/').all(|seg| seg != "..")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SourceFormat {
    RecapV1,
    #[default]
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatSession {
    pub session_id: String,
    pub user: UserRef,
    pub requests: Vec<ChatRequest>,
    #[serde(default)]
    pub source_format: SourceFormat,
}

impl ChatSession {
    pub fn first_timestamp(&self) -> Option<TimestampMs> {
        self.requests.first().map(|r| r.timestamp_ms)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub request_id: String,
    pub timestamp_ms: TimestampMs,
    pub prompt_text: String,
    #[serde(default)]
    pub model_id: String,
    #[serde(default)]
    pub response_text: String,
    #[serde(default)]
    pub tool_calls: Vec<ToolCall>,
    #[serde(default)]
    pub text_edit_groups: Vec<TextEditGroup>,
    #[serde(default)]
    pub is_agent_turn: bool,
    /// Set during ingest; analytics skip trivial prompts, the timeline keeps them.
    #[serde(default)]
    pub is_trivial: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolCall {
    pub tool_name: String,
    #[serde(default)]
    pub arguments_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exit_code: Option<i32>,
}

impl ToolCall {
    /// Terminal/command invocations are the only tools that report exit codes.
    pub fn is_terminal(&self) -> bool {
        let name = self.tool_name.to_ascii_lowercase();
        ["terminal", "shell", "command", "bash", "exec"]
            .iter()
            .any(|k| name.contains(k))
    }
}

/// A file path plus the exact lines an AI response proposed to insert.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextEditGroup {
    pub file_path: String,
    pub proposed_lines: Vec<String>,
    pub request_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommitKind {
    Save,
    Create,
    Delete,
    Rename,
    DirtySnapshot,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FileChange {
    Create,
    Modify,
    Delete,
    Rename,
}

/// A contiguous replaced region. `old_len` lines starting at `old_start` in
/// the parent version become `new_len` lines starting at `new_start`. The
/// line contents live in the owning diff's `removed_lines`/`added_lines`, in
/// hunk order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hunk {
    pub old_start: usize,
    pub old_len: usize,
    pub new_start: usize,
    pub new_len: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDiff {
    pub file_path: String,
    pub change: FileChange,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rename_from: Option<String>,
    pub added_lines: Vec<String>,
    pub removed_lines: Vec<String>,
    pub net_new_chars: u64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub binary: bool,
    #[serde(default)]
    pub hunks: Vec<Hunk>,
    /// Whether the new version ends with a newline (false for deletions).
    #[serde(default)]
    pub trailing_newline: bool,
}

impl FileDiff {
    pub fn expected_net_new_chars(&self) -> u64 {
        let added: u64 = self
            .added_lines
            .iter()
            .map(|l| l.chars().count() as u64)
            .sum();
        let removed: u64 = self
            .removed_lines
            .iter()
            .map(|l| l.chars().count() as u64)
            .sum();
        added.saturating_sub(removed)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShadowCommit {
    /// Position along first-parent history, oldest first, starting at 0.
    pub seq: u32,
    pub commit_id: String,
    pub user: UserRef,
    pub timestamp_ms: TimestampMs,
    pub kind: CommitKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub file_diffs: Vec<FileDiff>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rename_from: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rename_to: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Human,
    Copilot,
    ExternalSuspected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchClass {
    Full,
    Partial,
    Unmatched,
}

/// Verdict for one (commit, file) diff.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribution {
    pub commit_id: String,
    pub file_path: String,
    pub origin: Origin,
    pub match_class: MatchClass,
    pub match_score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matched_request_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_delta_s: Option<f64>,
    /// Implied typing speed against the previous commit, when one exists.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub implied_wpm: Option<f64>,
    #[serde(flatten)]
    pub extra: ExtraFields,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    HumanEdit,
    CopilotEdit,
    ExternalEdit,
    ChatPrompt,
    AgentAction,
}

impl EventKind {
    pub const ALL: [EventKind; 5] = [
        EventKind::HumanEdit,
        EventKind::CopilotEdit,
        EventKind::ExternalEdit,
        EventKind::ChatPrompt,
        EventKind::AgentAction,
    ];

    pub fn is_edit(self) -> bool {
        matches!(
            self,
            EventKind::HumanEdit | EventKind::CopilotEdit | EventKind::ExternalEdit
        )
    }

    /// Ordering among events sharing a timestamp: prompts, then agent
    /// actions, then edits.
    pub fn tie_rank(self) -> u8 {
        match self {
            EventKind::ChatPrompt => 0,
            EventKind::AgentAction => 1,
            _ => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::HumanEdit => "human_edit",
            EventKind::CopilotEdit => "copilot_edit",
            EventKind::ExternalEdit => "external_edit",
            EventKind::ChatPrompt => "chat_prompt",
            EventKind::AgentAction => "agent_action",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineEvent {
    pub event_id: String,
    pub user: UserRef,
    pub timestamp_ms: TimestampMs,
    pub kind: EventKind,
    pub payload_ref: String,
    #[serde(flatten)]
    pub extra: ExtraFields,
}

/// Canonical event order: timestamp, kind rank, payload id, event id.
pub fn event_order(a: &TimelineEvent, b: &TimelineEvent) -> Ordering {
    a.timestamp_ms
        .cmp(&b.timestamp_ms)
        .then(a.kind.tie_rank().cmp(&b.kind.tie_rank()))
        .then_with(|| a.payload_ref.cmp(&b.payload_ref))
        .then_with(|| a.event_id.cmp(&b.event_id))
}

/// Self-contained per-user export consumed by the replay viewer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timeline {
    pub schema_version: u32,
    pub user: UserRef,
    pub attribution_config: AttributionConfig,
    pub events: Vec<TimelineEvent>,
    pub attributions: Vec<Attribution>,
    pub sessions: Vec<ChatSession>,
    pub commits: Vec<ShadowCommit>,
    #[serde(flatten)]
    pub extra: ExtraFields,
}

impl Timeline {
    pub fn from_json(bytes: &[u8]) -> Result<Self, serde_json::Error> {
        serde_json::from_slice(bytes)
    }

    pub fn to_json_pretty(&self) -> Result<String, serde_json::Error> {
        serde_json::to_string_pretty(self)
    }

    pub fn request(&self, request_id: &str) -> Option<&ChatRequest> {
        self.sessions
            .iter()
            .flat_map(|s| s.requests.iter())
            .find(|r| r.request_id == request_id)
    }
}
