//! Reads a directory of chat session files.

use std::collections::{BTreeSet, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ChatRequest, ChatSession, SourceFormat, TextEditGroup, ToolCall, UserRef};
use crate::par::{self, Exec};

pub const CHAT_SCHEMA: &str = "recap-chat-v1";

pub const DEFAULT_TRIVIAL_LEXICON: [&str; 17] = [
    "yes", "no", "ok", "okay", "hi", "hello", "hey", "thanks", "thank", "sure", "yep", "yeah",
    "cool", "great", "nice", "done", "good",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct IngestConfig {
    pub trivial_lexicon: BTreeSet<String>,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig {
            trivial_lexicon: DEFAULT_TRIVIAL_LEXICON
                .iter()
                .map(|s| s.to_string())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub files_seen: usize,
    pub sessions_parsed: usize,
    pub requests_total: usize,
    pub trivial_prompts_excluded: usize,
    pub warnings: Vec<String>,
}

/// On-disk chat session file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatFile {
    pub schema: String,
    pub session_id: String,
    pub user_hash: String,
    pub requests: Vec<ChatFileRequest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatFileRequest {
    pub request_id: String,
    pub timestamp_ms: i64,
    pub prompt: String,
    #[serde(default)]
    pub model: String,
    #[serde(default)]
    pub response: String,
    #[serde(default)]
    pub is_agent_turn: bool,
    #[serde(default)]
    pub tool_calls: Vec<ChatFileToolCall>,
    #[serde(default)]
    pub text_edit_groups: Vec<ChatFileEditGroup>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatFileToolCall {
    pub tool: String,
    #[serde(default)]
    pub args: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exit_code: Option<i32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatFileEditGroup {
    pub file_path: String,
    pub lines: Vec<String>,
}

impl ChatFile {
    pub fn from_session(session: &ChatSession) -> Self {
        ChatFile {
            schema: CHAT_SCHEMA.to_string(),
            session_id: session.session_id.clone(),
            user_hash: session.user.as_str().to_string(),
            requests: session
                .requests
                .iter()
                .map(|r| ChatFileRequest {
                    request_id: r.request_id.clone(),
                    timestamp_ms: r.timestamp_ms,
                    prompt: r.prompt_text.clone(),
                    model: r.model_id.clone(),
                    response: r.response_text.clone(),
                    is_agent_turn: r.is_agent_turn,
                    tool_calls: r
                        .tool_calls
                        .iter()
                        .map(|t| ChatFileToolCall {
                            tool: t.tool_name.clone(),
                            args: t.arguments_text.clone(),
                            exit_code: t.exit_code,
                        })
                        .collect(),
                    text_edit_groups: r
                        .text_edit_groups
                        .iter()
                        .map(|g| ChatFileEditGroup {
                            file_path: g.file_path.clone(),
                            lines: g.proposed_lines.clone(),
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    /// Convert to the domain type, flagging trivial prompts. Returns the
    /// session and any warnings about its content.
    pub fn into_session(
        self,
        config: &IngestConfig,
    ) -> std::result::Result<(ChatSession, Vec<String>), String> {
        let user = UserRef::parse(&self.user_hash)
            .ok_or_else(|| format!("user_hash {:?} is not a SHA-256 hex digest", self.user_hash))?;
        let mut warnings = Vec::new();
        let source_format = if self.schema == CHAT_SCHEMA {
            SourceFormat::RecapV1
        } else {
            warnings.push(format!("unrecognized schema {:?}", self.schema));
            SourceFormat::Unknown
        };
        let mut requests: Vec<ChatRequest> = self
            .requests
            .into_iter()
            .map(|r| {
                let is_trivial = is_trivial_prompt_with(&r.prompt, &config.trivial_lexicon);
                ChatRequest {
                    text_edit_groups: r
                        .text_edit_groups
                        .into_iter()
                        .map(|g| TextEditGroup {
                            file_path: g.file_path,
                            proposed_lines: g.lines,
                            request_id: r.request_id.clone(),
                        })
                        .collect(),
                    tool_calls: r
                        .tool_calls
                        .into_iter()
                        .map(|t| ToolCall {
                            tool_name: t.tool,
                            arguments_text: t.args,
                            exit_code: t.exit_code,
                        })
                        .collect(),
                    request_id: r.request_id,
                    timestamp_ms: r.timestamp_ms,
                    prompt_text: r.prompt,
                    model_id: r.model,
                    response_text: r.response,
                    is_agent_turn: r.is_agent_turn,
                    is_trivial,
                }
            })
            .collect();
        if requests
            .windows(2)
            .any(|w| w[1].timestamp_ms < w[0].timestamp_ms)
        {
            warnings.push("requests out of time order; re-sorted".to_string());
            requests.sort_by_key(|r| r.timestamp_ms);
        }
        let mut seen = HashSet::new();
        for r in &requests {
            if !seen.insert(r.request_id.as_str()) {
                warnings.push(format!("duplicate request_id {:?}", r.request_id));
            }
        }
        Ok((
            ChatSession {
                session_id: self.session_id,
                user,
                requests,
                source_format,
            },
            warnings,
        ))
    }
}

/// Trivial-prompt test with the default lexicon.
pub fn is_trivial_prompt(prompt_text: &str) -> bool {
    is_trivial_prompt_with(prompt_text, &IngestConfig::default().trivial_lexicon)
}

pub fn is_trivial_prompt_with(prompt_text: &str, lexicon: &BTreeSet<String>) -> bool {
    let trimmed = prompt_text
        .trim_matches(|c: char| c.is_whitespace() || c.is_ascii_punctuation())
        .to_lowercase();
    if lexicon.contains(&trimmed) {
        return true;
    }
    let tokens: Vec<&str> = trimmed
        .split(|c: char| !c.is_alphabetic())
        .filter(|t| !t.is_empty())
        .collect();
    tokens.len() <= 2 && tokens.iter().all(|t| lexicon.contains(*t))
}

fn parse_file(
    path: &Path,
    config: &IngestConfig,
) -> std::result::Result<(ChatSession, Vec<String>), String> {
    let bytes = fs::read(path).map_err(|e| e.to_string())?;
    let file: ChatFile = serde_json::from_slice(&bytes).map_err(|e| e.to_string())?;
    file.into_session(config)
}

/// List `*.json` files in `dir`, sorted by name.
pub(crate) fn json_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if path.extension().is_some_and(|ext| ext == "json") && path.is_file() {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// Read every chat session file in `dir`. Corrupt files become warnings.
pub fn ingest_chats(dir: &Path, config: &IngestConfig) -> Result<(Vec<ChatSession>, IngestReport)> {
    ingest_chats_with(dir, config, Exec::default())
}

pub fn ingest_chats_with(
    dir: &Path,
    config: &IngestConfig,
    exec: Exec,
) -> Result<(Vec<ChatSession>, IngestReport)> {
    let files = json_files(dir)?;
    let parsed = par::map(exec, &files, |path| parse_file(path, config));

    let mut report = IngestReport {
        files_seen: files.len(),
        ..Default::default()
    };
    let mut sessions = Vec::new();
    let mut ids = HashSet::new();
    for (path, result) in files.iter().zip(parsed) {
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        match result {
            Err(e) => report.warnings.push(format!("{name}: {e}")),
            Ok((session, warnings)) => {
                report
                    .warnings
                    .extend(warnings.into_iter().map(|w| format!("{name}: {w}")));
                if !ids.insert((session.user.clone(), session.session_id.clone())) {
                    report.warnings.push(format!(
                        "{name}: duplicate session_id {:?}; skipped",
                        session.session_id
                    ));
                    continue;
                }
                sessions.push(session);
            }
        }
    }
    sessions.sort_by(|a, b| {
        a.first_timestamp()
            .cmp(&b.first_timestamp())
            .then_with(|| a.user.cmp(&b.user))
            .then_with(|| a.session_id.cmp(&b.session_id))
    });
    report.sessions_parsed = sessions.len();
    for s in &sessions {
        report.requests_total += s.requests.len();
        report.trivial_prompts_excluded += s.requests.iter().filter(|r| r.is_trivial).count();
    }
    Ok((sessions, report))
}
