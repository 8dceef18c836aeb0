//! Seeded generator for paired chat logs and shadow histories with known
//! ground truth.
//!
//! A corpus is first built in memory as a list of file operations per user.
//! [`write_corpus`] then lays it out on disk: chat files, one shadow
//! repository (or bundle) per user written with `git fast-import`, and
//! `truth.json`.

pub mod bank;
mod writer;

use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analytics::behavior::CODEBOOK;
use crate::chat::is_trivial_prompt;
use crate::diff::compute_text_file_diff;
use crate::error::{Error, Result};
use crate::model::{
    ChatRequest, ChatSession, CommitKind, FileChange, Origin, ShadowCommit, SourceFormat,
    TextEditGroup, ToolCall, UserRef,
};
use crate::shadow::format_commit_message;

pub use writer::{write_corpus, ShadowLayout};

pub const TRUTH_SCHEMA: &str = "recap-truth-v1";

/// 2026-01-01T00:00:00Z.
const BASE_TIME_S: i64 = 1_767_225_600;
const SESSION_SPACING_S: i64 = 2 * 3600;

/// How accepted AI lines are altered before they reach the shadow history.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Perturbation {
    #[default]
    None,
    /// Re-indent and widen interior whitespace.
    Whitespace,
    /// Replace a fixed fraction of each accepted group's lines.
    PartialRewrite,
    /// Like `None`, plus one large paste per session with no chat source.
    ExternalPaste,
}

/// Human typing cadence, in seconds between dirty snapshots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cadence {
    pub min_gap_s: u32,
    pub max_gap_s: u32,
}

impl Default for Cadence {
    fn default() -> Self {
        Cadence {
            min_gap_s: 10,
            max_gap_s: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_users: u32,
    pub sessions_per_user: u32,
    pub prompts_per_session: u32,
    pub p_accept: f64,
    pub perturbation: Perturbation,
    /// Fraction of lines replaced under [`Perturbation::PartialRewrite`].
    pub rewrite_fraction: f64,
    pub paste_chars: usize,
    pub paste_interval_s: u32,
    /// Upper bound on edit groups per prompt; each targets a different file.
    pub max_edit_groups: u32,
    pub cadence: Cadence,
    /// Emit occasional trivial prompts, ambiguous prompts and agent turns.
    pub chatter: bool,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 1,
            n_users: 1,
            sessions_per_user: 1,
            prompts_per_session: 2,
            p_accept: 1.0,
            perturbation: Perturbation::None,
            rewrite_fraction: 0.4,
            paste_chars: 3000,
            paste_interval_s: 30,
            max_edit_groups: 1,
            cadence: Cadence::default(),
            chatter: true,
        }
    }
}

impl SynthConfig {
    pub fn check(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p_accept) {
            return Err(Error::Config(format!(
                "p_accept {} outside [0, 1]",
                self.p_accept
            )));
        }
        if !(0.0..1.0).contains(&self.rewrite_fraction) {
            return Err(Error::Config(format!(
                "rewrite_fraction {} outside [0, 1)",
                self.rewrite_fraction
            )));
        }
        if self.cadence.min_gap_s == 0 || self.cadence.min_gap_s > self.cadence.max_gap_s {
            return Err(Error::Config(
                "cadence needs 0 < min_gap_s <= max_gap_s".into(),
            ));
        }
        if self.max_edit_groups == 0 {
            return Err(Error::Config("max_edit_groups must be at least 1".into()));
        }
        if self.paste_chars == 0 {
            return Err(Error::Config("paste_chars must be positive".into()));
        }
        Ok(())
    }
}

/// Expected origin of one (commit, file) pair with added lines.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthEntry {
    pub user_hash: UserRef,
    pub commit_seq: u32,
    pub file_path: String,
    pub origin: Origin,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub request_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub schema: String,
    pub entries: Vec<TruthEntry>,
}

/// What a synthetic commit does to the workspace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FileAction {
    Write(String),
    Delete,
    Rename { from: String },
    Nothing,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthCommit {
    pub timestamp_s: i64,
    pub kind: CommitKind,
    /// Path named in the commit message, if any.
    pub path: Option<String>,
    pub action: FileAction,
}

impl SynthCommit {
    pub fn message(&self) -> String {
        let from = match &self.action {
            FileAction::Rename { from } => Some(from.as_str()),
            _ => None,
        };
        format_commit_message(&self.kind, self.path.as_deref(), from)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthUser {
    pub user: UserRef,
    pub sessions: Vec<ChatSession>,
    pub commits: Vec<SynthCommit>,
}

impl SynthUser {
    /// Workspace contents after every commit has been applied.
    pub fn final_files(&self) -> BTreeMap<String, String> {
        let mut files = BTreeMap::new();
        for c in &self.commits {
            apply_action(&mut files, c);
        }
        files
    }

    /// The shadow history as it reads back from git, computed in memory.
    /// Commit ids are derived from the user and sequence number rather than
    /// real object ids.
    pub fn shadow_commits(&self) -> Vec<ShadowCommit> {
        let mut files: BTreeMap<String, String> = BTreeMap::new();
        let mut out = Vec::with_capacity(self.commits.len());
        for (seq, c) in self.commits.iter().enumerate() {
            let file_diffs = match (&c.action, &c.path) {
                (FileAction::Write(content), Some(path)) => vec![compute_text_file_diff(
                    files.get(path).map(String::as_str),
                    Some(content),
                    path,
                )]
                .into_iter()
                .filter(|d| d.change != FileChange::Modify || !d.hunks.is_empty())
                .collect(),
                (FileAction::Delete, Some(path)) => {
                    vec![compute_text_file_diff(
                        files.get(path).map(String::as_str),
                        None,
                        path,
                    )]
                }
                (FileAction::Rename { from }, Some(path)) => {
                    let content = files.get(from).map(String::as_str);
                    let mut d = compute_text_file_diff(content, content, path);
                    d.change = FileChange::Rename;
                    d.rename_from = Some(from.clone());
                    vec![d]
                }
                _ => Vec::new(),
            };
            let (rename_from, rename_to) = match &c.action {
                FileAction::Rename { from } => (Some(from.clone()), c.path.clone()),
                _ => (None, None),
            };
            apply_action(&mut files, c);
            out.push(ShadowCommit {
                seq: seq as u32,
                commit_id: synthetic_commit_id(&self.user, seq),
                user: self.user.clone(),
                timestamp_ms: c.timestamp_s * 1000,
                kind: c.kind.clone(),
                message: Some(c.message()),
                file_diffs,
                rename_from,
                rename_to,
            });
        }
        out
    }
}

fn synthetic_commit_id(user: &UserRef, seq: usize) -> String {
    let digest = Sha256::digest(format!("{}:{seq}", user.as_str()).as_bytes());
    digest.iter().take(20).map(|b| format!("{b:02x}")).collect()
}

fn apply_action(files: &mut BTreeMap<String, String>, c: &SynthCommit) {
    match (&c.action, &c.path) {
        (FileAction::Write(content), Some(path)) => {
            files.insert(path.clone(), content.clone());
        }
        (FileAction::Delete, Some(path)) => {
            files.remove(path);
        }
        (FileAction::Rename { from }, Some(path)) => {
            if let Some(content) = files.remove(from) {
                files.insert(path.clone(), content);
            }
        }
        _ => {}
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub config: SynthConfig,
    pub users: Vec<SynthUser>,
    pub truth: GroundTruth,
}

/// Build a corpus in memory. The same config always yields the same corpus.
pub fn generate_corpus(config: &SynthConfig) -> Result<SynthCorpus> {
    config.check()?;
    let mut master = ChaCha8Rng::seed_from_u64(config.seed);
    let mut users = Vec::with_capacity(config.n_users as usize);
    let mut entries = Vec::new();
    for u in 0..config.n_users {
        let rng = ChaCha8Rng::seed_from_u64(master.random());
        let mut gen = UserGen::new(config, u, rng);
        gen.run();
        entries.extend(gen.truth);
        users.push(SynthUser {
            user: gen.user,
            sessions: gen.sessions,
            commits: gen.commits,
        });
    }
    Ok(SynthCorpus {
        config: config.clone(),
        users,
        truth: GroundTruth {
            schema: TRUTH_SCHEMA.to_string(),
            entries,
        },
    })
}

/// Generate and write a corpus to `out_dir`, returning its ground truth.
pub fn generate(
    config: &SynthConfig,
    out_dir: &std::path::Path,
    layout: ShadowLayout,
) -> Result<GroundTruth> {
    let corpus = generate_corpus(config)?;
    write_corpus(&corpus, out_dir, layout)?;
    Ok(corpus.truth)
}

const STARTER_FILES: [(&str, &str); 2] = [
    (
        "app/main.py",
        "import sys\n\nfrom app.utils import load_config\n\n\ndef main():\n    config = load_config(sys.argv[1:])\n    print(config)\n",
    ),
    (
        "app/utils.py",
        "import json\n\n\ndef load_config(args):\n    if not args:\n        return {}\n    with open(args[0]) as fh:\n        return json.load(fh)\n",
    ),
];

struct UserGen<'a> {
    cfg: &'a SynthConfig,
    index: u32,
    rng: ChaCha8Rng,
    user: UserRef,
    files: BTreeMap<String, Vec<String>>,
    sessions: Vec<ChatSession>,
    commits: Vec<SynthCommit>,
    truth: Vec<TruthEntry>,
    /// Current time in whole seconds.
    now: i64,
    prompt_counter: u32,
    new_file_counter: u32,
    human_line_counter: u32,
    /// Line most recently typed by hand, as (path, line).
    last_typed: Option<(String, String)>,
}

impl<'a> UserGen<'a> {
    fn new(cfg: &'a SynthConfig, index: u32, rng: ChaCha8Rng) -> Self {
        UserGen {
            cfg,
            index,
            rng,
            user: UserRef::from_raw(&format!("student-{:03}", index + 1)),
            files: BTreeMap::new(),
            sessions: Vec::new(),
            commits: Vec::new(),
            truth: Vec::new(),
            now: BASE_TIME_S + index as i64 * 3600,
            prompt_counter: 0,
            new_file_counter: 0,
            human_line_counter: 0,
            last_typed: None,
        }
    }

    fn run(&mut self) {
        for s in 0..self.cfg.sessions_per_user {
            if s > 0 {
                self.now += SESSION_SPACING_S + self.rng.random_range(0..3600);
            }
            self.session(s);
        }
    }

    fn session(&mut self, s: u32) {
        if s == 0 {
            for (path, content) in STARTER_FILES {
                let lines = content.lines().map(str::to_string).collect();
                self.commit(CommitKind::Create, path, lines, Origin::Human, None);
                self.now += 60;
            }
        }
        let session_id = self.uuid();
        let mut requests = Vec::new();
        let paste_at = self.cfg.prompts_per_session / 2;
        for p in 0..self.cfg.prompts_per_session {
            self.now += self.rng.random_range(45..=150);
            if self.cfg.chatter && self.rng.random_bool(0.1) {
                let text = *bank::TRIVIAL_PROMPTS
                    .choose(&mut self.rng)
                    .expect("non-empty");
                requests.push(self.plain_request(text));
                self.now += self.rng.random_range(20..=40);
            }
            if self.cfg.chatter && self.rng.random_bool(0.03) {
                let text = *bank::AMBIGUOUS_PROMPTS
                    .choose(&mut self.rng)
                    .expect("non-empty");
                requests.push(self.plain_request(text));
                self.now += self.rng.random_range(20..=40);
            }
            requests.push(self.ai_request());
            self.human_burst();
            if self.cfg.perturbation == Perturbation::ExternalPaste && p == paste_at {
                self.paste();
            }
            if self.cfg.chatter {
                self.housekeeping();
            }
        }
        if self.cfg.perturbation == Perturbation::ExternalPaste && self.cfg.prompts_per_session == 0
        {
            self.paste();
        }
        if !requests.is_empty() {
            self.sessions.push(ChatSession {
                session_id,
                user: self.user.clone(),
                requests,
                source_format: SourceFormat::RecapV1,
            });
        }
    }

    fn uuid(&mut self) -> String {
        let b: [u8; 16] = self.rng.random();
        let hex: String = b.iter().map(|x| format!("{x:02x}")).collect();
        format!(
            "{}-{}-{}-{}-{}",
            &hex[0..8],
            &hex[8..12],
            &hex[12..16],
            &hex[16..20],
            &hex[20..32]
        )
    }

    fn request_id(&mut self) -> String {
        format!("request_{}", self.uuid())
    }

    fn request_ts_ms(&mut self) -> i64 {
        self.now * 1000 + self.rng.random_range(0..1000)
    }

    fn plain_request(&mut self, text: &str) -> ChatRequest {
        ChatRequest {
            request_id: self.request_id(),
            timestamp_ms: self.request_ts_ms(),
            prompt_text: text.to_string(),
            model_id: "gpt-4o".to_string(),
            response_text: "Sure.".to_string(),
            tool_calls: Vec::new(),
            text_edit_groups: Vec::new(),
            is_agent_turn: false,
            is_trivial: is_trivial_prompt(text),
        }
    }

    fn ai_request(&mut self) -> ChatRequest {
        let g = self.prompt_counter;
        self.prompt_counter += 1;
        let (_, prompts) = bank::PROMPT_BANK[((g + self.index) as usize) % CODEBOOK.len()];
        let prompt = *prompts.choose(&mut self.rng).expect("non-empty");
        let request_id = self.request_id();
        let timestamp_ms = self.request_ts_ms();

        let n_groups = self.rng.random_range(1..=self.cfg.max_edit_groups);
        let mut targets: Vec<String> = Vec::new();
        for _ in 0..n_groups {
            let existing: Vec<&String> =
                self.files.keys().filter(|p| !targets.contains(p)).collect();
            let path = if !existing.is_empty() && self.rng.random_bool(0.6) {
                (*existing.choose(&mut self.rng).expect("non-empty")).clone()
            } else {
                self.new_file_counter += 1;
                format!("app/feature_{}.py", self.new_file_counter)
            };
            targets.push(path);
        }
        let groups: Vec<TextEditGroup> = targets
            .iter()
            .enumerate()
            .map(|(t, path)| {
                let n_lines = if self.rng.random_bool(0.3) { 10 } else { 5 };
                TextEditGroup {
                    file_path: path.clone(),
                    proposed_lines: proposed_lines(
                        &format!("u{}g{}t{}", self.index, g, t),
                        n_lines,
                    ),
                    request_id: request_id.clone(),
                }
            })
            .collect();

        let is_agent_turn = self.cfg.chatter && self.rng.random_bool(0.3);
        let tool_calls = if is_agent_turn {
            vec![
                ToolCall {
                    tool_name: "read_file".to_string(),
                    arguments_text: format!("{{\"path\": \"{}\"}}", groups[0].file_path),
                    exit_code: None,
                },
                ToolCall {
                    tool_name: "run_in_terminal".to_string(),
                    arguments_text: "{\"command\": \"python -m pytest -q\"}".to_string(),
                    exit_code: Some(if self.rng.random_bool(0.7) { 0 } else { 1 }),
                },
            ]
        } else {
            Vec::new()
        };

        if self.rng.random_bool(self.cfg.p_accept) {
            self.now += self.rng.random_range(20..=120);
            for (i, group) in groups.iter().enumerate() {
                if i > 0 {
                    self.now += self.rng.random_range(10..=40);
                }
                self.accept(group, &request_id);
            }
        }

        ChatRequest {
            request_id,
            timestamp_ms,
            prompt_text: prompt.to_string(),
            model_id: "gpt-4o".to_string(),
            response_text: format!("Here is one way to do it in {}.", groups[0].file_path),
            tool_calls,
            text_edit_groups: groups,
            is_agent_turn,
            is_trivial: is_trivial_prompt(prompt),
        }
    }

    fn accept(&mut self, group: &TextEditGroup, request_id: &str) {
        let mut lines: Vec<String> = group.proposed_lines.clone();
        match self.cfg.perturbation {
            Perturbation::Whitespace => {
                for l in &mut lines {
                    *l = format!("\t{}  ", l.replace(' ', "  "));
                }
            }
            Perturbation::PartialRewrite => {
                let n = (self.cfg.rewrite_fraction * lines.len() as f64).round() as usize;
                for l in lines.iter_mut().take(n) {
                    *l = format!("{l}  # adjusted by hand");
                }
            }
            Perturbation::None | Perturbation::ExternalPaste => {}
        }
        let path = group.file_path.clone();
        let (kind, mut content) = match self.files.get(&path) {
            Some(existing) => (CommitKind::Save, existing.clone()),
            None => (CommitKind::Create, Vec::new()),
        };
        let at = self.rng.random_range(0..=content.len());
        content.splice(at..at, lines);
        self.commit(
            kind,
            &path,
            content,
            Origin::Copilot,
            Some(request_id.to_string()),
        );
    }

    fn human_burst(&mut self) {
        let Some(path) = self.pick_file() else { return };
        let n_lines = self.rng.random_range(1..=2);
        for _ in 0..n_lines {
            self.now += self.cadence_gap();
            self.human_line_counter += 1;
            let line = format!(
                "x_{}_{} = {}",
                self.index,
                self.human_line_counter,
                self.rng.random_range(0..1000)
            );
            let mut content = self.files[&path].clone();
            let at = self.rng.random_range(0..=content.len());
            content.insert(at, line.clone());
            self.commit(
                CommitKind::DirtySnapshot,
                &path,
                content,
                Origin::Human,
                None,
            );
            self.last_typed = Some((path.clone(), line));
        }
        self.now += self.rng.random_range(8..=20);
        let mut content = self.files[&path].clone();
        if self.rng.random_bool(0.5) {
            if let Some((typed_path, line)) = self.last_typed.take() {
                if typed_path == path {
                    if let Some(pos) = content.iter().position(|l| *l == line) {
                        content[pos] = format!("{line} + 1");
                    }
                }
            }
        }
        self.commit(CommitKind::Save, &path, content, Origin::Human, None);
        if self.cfg.chatter && self.rng.random_bool(0.05) {
            self.now += self.cadence_gap();
            self.commits.push(SynthCommit {
                timestamp_s: self.now,
                kind: CommitKind::DirtySnapshot,
                path: None,
                action: FileAction::Nothing,
            });
        }
    }

    fn cadence_gap(&mut self) -> i64 {
        self.rng
            .random_range(self.cfg.cadence.min_gap_s..=self.cfg.cadence.max_gap_s) as i64
    }

    fn pick_file(&mut self) -> Option<String> {
        let paths: Vec<&String> = self.files.keys().collect();
        paths.choose(&mut self.rng).map(|p| (*p).clone())
    }

    /// Occasional rename or deletion of a file the generator created.
    fn housekeeping(&mut self) {
        let candidates: Vec<String> = self
            .files
            .keys()
            .filter(|p| !STARTER_FILES.iter().any(|(s, _)| s == p))
            .cloned()
            .collect();
        let Some(path) = candidates.choose(&mut self.rng).cloned() else {
            return;
        };
        let roll: f64 = self.rng.random();
        if roll < 0.05 {
            self.now += self.cadence_gap();
            self.new_file_counter += 1;
            let to = format!("app/module_{}.py", self.new_file_counter);
            let content = self.files.remove(&path).expect("known file");
            self.files.insert(to.clone(), content);
            self.commits.push(SynthCommit {
                timestamp_s: self.now,
                kind: CommitKind::Rename,
                path: Some(to),
                action: FileAction::Rename { from: path },
            });
        } else if roll < 0.08 {
            self.now += self.cadence_gap();
            self.files.remove(&path);
            self.commits.push(SynthCommit {
                timestamp_s: self.now,
                kind: CommitKind::Delete,
                path: Some(path),
                action: FileAction::Delete,
            });
        }
    }

    fn paste(&mut self) {
        let Some(path) = self.pick_file() else { return };
        let last = self.commits.last().map_or(self.now, |c| c.timestamp_s);
        self.now = last + self.cfg.paste_interval_s as i64;
        let tag = format!("u{}p{}", self.index, self.commits.len());
        let mut content = self.files[&path].clone();
        content.extend(paste_lines(&tag, self.cfg.paste_chars));
        self.commit(
            CommitKind::Save,
            &path,
            content,
            Origin::ExternalSuspected,
            None,
        );
    }

    fn commit(
        &mut self,
        kind: CommitKind,
        path: &str,
        lines: Vec<String>,
        origin: Origin,
        request_id: Option<String>,
    ) {
        let old = self.files.get(path).map(|l| render(l));
        let new = render(&lines);
        let diff = compute_text_file_diff(old.as_deref(), Some(&new), path);
        if !diff.added_lines.is_empty() {
            self.truth.push(TruthEntry {
                user_hash: self.user.clone(),
                commit_seq: self.commits.len() as u32,
                file_path: path.to_string(),
                origin,
                request_id,
            });
        }
        self.files.insert(path.to_string(), lines);
        self.commits.push(SynthCommit {
            timestamp_s: self.now,
            kind,
            path: Some(path.to_string()),
            action: FileAction::Write(new),
        });
    }
}

fn render(lines: &[String]) -> String {
    let mut s = String::new();
    for l in lines {
        s.push_str(l);
        s.push('\n');
    }
    s
}

/// Distinct, realistic-looking lines; `tag` keeps them unique corpus-wide.
fn proposed_lines(tag: &str, n: usize) -> Vec<String> {
    let mut out = vec![format!("def handle_{tag}(payload, limit=10):")];
    for j in 1..n {
        out.push(match j % 4 {
            1 => format!("    items_{tag}_{j} = [m for m in payload if m.get(\"topic\")]"),
            2 => format!("    if len(items_{tag}_{}) > limit:", j - 1),
            3 => format!(
                "        return summarize(items_{tag}_{}, mode=\"short\")",
                j - 2
            ),
            _ => format!("    log.debug(\"step {j} of {tag}\")"),
        });
    }
    out
}

/// Lines totalling exactly `total` characters.
fn paste_lines(tag: &str, total: usize) -> Vec<String> {
    let mut out = Vec::new();
    let mut remaining = total;
    let mut k = 0;
    while remaining > 0 {
        let head = format!("PASTED_{tag}_{k} = ");
        let want = if remaining >= 120 { 60 } else { remaining };
        let line = if want > head.len() {
            format!("{head}{}", "q".repeat(want - head.len()))
        } else {
            "q".repeat(want)
        };
        remaining -= line.chars().count();
        out.push(line);
        k += 1;
    }
    out
}
