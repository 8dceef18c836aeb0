//! Reads a shadow git repository into labeled commits with line-level diffs.
//!
//! Git access goes through the `git` executable. Only read commands are
//! issued against the repository (`rev-parse`, `log`, `diff-tree`,
//! `cat-file`); bundles are cloned into a temporary directory first.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use crate::diff::compute_file_diff;
use crate::error::{Error, Result};
use crate::model::{CommitKind, FileChange, FileDiff, ShadowCommit, UserRef};

/// Where a shadow history lives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RepoSource {
    Directory(PathBuf),
    Bundle(PathBuf),
}

impl RepoSource {
    /// A `*.bundle` file is a bundle; anything else is a repository directory.
    pub fn from_path(path: impl Into<PathBuf>) -> Self {
        let path = path.into();
        if path.is_file() && path.extension().is_some_and(|e| e == "bundle") {
            RepoSource::Bundle(path)
        } else {
            RepoSource::Directory(path)
        }
    }

    pub fn path(&self) -> &Path {
        match self {
            RepoSource::Directory(p) | RepoSource::Bundle(p) => p,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShadowHistory {
    pub commits: Vec<ShadowCommit>,
    pub warnings: Vec<String>,
}

/// Commit kind and paths recovered from a shadow commit message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommitLabel {
    pub kind: CommitKind,
    pub path: Option<String>,
    pub rename: Option<(String, String)>,
}

const NO_PATH: &str = "—";

/// Parse the first line of a commit message. Anything outside the grammar
/// maps to [`CommitKind::Unknown`].
pub fn parse_commit_message(message: &str) -> CommitLabel {
    let line = message.lines().next().unwrap_or("").trim();
    let unknown = CommitLabel {
        kind: CommitKind::Unknown,
        path: None,
        rename: None,
    };
    let (keyword, rest) = match line.split_once(char::is_whitespace) {
        Some((k, r)) => (k, r.trim()),
        None => (line, ""),
    };
    let keyword = keyword.to_ascii_uppercase();
    let with_path = |kind| {
        if rest.is_empty() {
            unknown.clone()
        } else {
            CommitLabel {
                kind,
                path: Some(rest.to_string()),
                rename: None,
            }
        }
    };
    match keyword.as_str() {
        "SAVE" => with_path(CommitKind::Save),
        "CREATE" => with_path(CommitKind::Create),
        "DELETE" => with_path(CommitKind::Delete),
        "RENAME" => match rest.split_once(" -> ") {
            Some((from, to)) if !from.trim().is_empty() && !to.trim().is_empty() => CommitLabel {
                kind: CommitKind::Rename,
                path: Some(to.trim().to_string()),
                rename: Some((from.trim().to_string(), to.trim().to_string())),
            },
            _ => unknown,
        },
        "DIRTY_SNAPSHOT" => dirty(rest),
        "DIRTY" => match rest.split_once(char::is_whitespace) {
            Some((s, tail)) if s.eq_ignore_ascii_case("SNAPSHOT") => dirty(tail.trim()),
            None if rest.eq_ignore_ascii_case("SNAPSHOT") => dirty(""),
            _ => unknown,
        },
        _ => unknown,
    }
}

fn dirty(rest: &str) -> CommitLabel {
    let path = match rest {
        "" | NO_PATH | "-" => None,
        p => Some(p.to_string()),
    };
    CommitLabel {
        kind: CommitKind::DirtySnapshot,
        path,
        rename: None,
    }
}

/// Render a label in the canonical message grammar.
pub fn format_commit_message(
    kind: &CommitKind,
    path: Option<&str>,
    rename_from: Option<&str>,
) -> String {
    let p = path.unwrap_or(NO_PATH);
    match kind {
        CommitKind::Save => format!("SAVE {p}"),
        CommitKind::Create => format!("CREATE {p}"),
        CommitKind::Delete => format!("DELETE {p}"),
        CommitKind::Rename => format!("RENAME {} -> {p}", rename_from.unwrap_or(NO_PATH)),
        CommitKind::DirtySnapshot => format!("DIRTY_SNAPSHOT {p}"),
        CommitKind::Unknown => format!("UPDATE {p}"),
    }
}

fn git_command(repo: &Path, args: &[&str]) -> Command {
    let mut cmd = Command::new("git");
    cmd.arg("-C")
        .arg(repo)
        .args(["-c", "core.quotepath=off"])
        .args(args)
        .env("GIT_TERMINAL_PROMPT", "0")
        .env_remove("GIT_DIR")
        .env_remove("GIT_WORK_TREE");
    cmd
}

pub(crate) fn run_git(repo: &Path, args: &[&str], input: Option<Vec<u8>>) -> Result<Vec<u8>> {
    let describe = || args.join(" ");
    let mut child = git_command(repo, args)
        .stdin(if input.is_some() {
            Stdio::piped()
        } else {
            Stdio::null()
        })
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| Error::Git {
            args: describe(),
            message: format!("cannot start git: {e}"),
        })?;
    let writer = input.map(|bytes| {
        let mut stdin = child.stdin.take().expect("piped stdin");
        std::thread::spawn(move || stdin.write_all(&bytes))
    });
    let mut stdout = Vec::new();
    child
        .stdout
        .take()
        .expect("piped stdout")
        .read_to_end(&mut stdout)
        .map_err(|e| Error::io(repo, e))?;
    let output = child.wait_with_output().map_err(|e| Error::io(repo, e))?;
    if let Some(handle) = writer {
        handle
            .join()
            .expect("stdin writer thread")
            .map_err(|e| Error::io(repo, e))?;
    }
    if !output.status.success() {
        return Err(Error::Git {
            args: describe(),
            message: String::from_utf8_lossy(&output.stderr).trim().to_string(),
        });
    }
    Ok(stdout)
}

struct LogEntry {
    id: String,
    parents: Vec<String>,
    author_time_s: i64,
    message: String,
}

#[derive(Debug)]
struct RawChange {
    status: char,
    old_blob: Option<String>,
    new_blob: Option<String>,
    old_path: String,
    new_path: String,
}

fn blob_id(id: &str, mode: &str) -> Option<String> {
    (mode != "000000" && id.bytes().any(|b| b != b'0')).then(|| id.to_string())
}

fn parse_diff_tree(output: &[u8]) -> HashMap<String, Vec<RawChange>> {
    let mut out: HashMap<String, Vec<RawChange>> = HashMap::new();
    let mut tokens = output
        .split(|b| *b == 0)
        .map(|t| String::from_utf8_lossy(t).into_owned());
    let mut current: Option<String> = None;
    while let Some(token) = tokens.next() {
        if token.is_empty() {
            continue;
        }
        if let Some(meta) = token.strip_prefix(':') {
            let fields: Vec<&str> = meta.split(' ').collect();
            if fields.len() < 5 {
                continue;
            }
            let (old_mode, new_mode, old_id, new_id, status) =
                (fields[0], fields[1], fields[2], fields[3], fields[4]);
            let status = status.chars().next().unwrap_or('M');
            let first = tokens.next().unwrap_or_default();
            let (old_path, new_path) = if matches!(status, 'R' | 'C') {
                let second = tokens.next().unwrap_or_default();
                (first, second)
            } else {
                (first.clone(), first)
            };
            // Submodule entries carry no file content.
            if old_mode == "160000" || new_mode == "160000" {
                continue;
            }
            if let Some(commit) = &current {
                out.entry(commit.clone()).or_default().push(RawChange {
                    status,
                    old_blob: blob_id(old_id, old_mode),
                    new_blob: blob_id(new_id, new_mode),
                    old_path,
                    new_path,
                });
            }
        } else {
            let id = token
                .split_whitespace()
                .next()
                .unwrap_or_default()
                .to_string();
            out.entry(id.clone()).or_default();
            current = Some(id);
        }
    }
    out
}

fn read_blobs(repo: &Path, ids: &[String]) -> Result<HashMap<String, Vec<u8>>> {
    let mut blobs = HashMap::new();
    if ids.is_empty() {
        return Ok(blobs);
    }
    let input: Vec<u8> = ids
        .iter()
        .flat_map(|id| format!("{id}\n").into_bytes())
        .collect();
    let out = run_git(repo, &["cat-file", "--batch"], Some(input))?;
    let mut pos = 0usize;
    while pos < out.len() {
        let eol = out[pos..]
            .iter()
            .position(|b| *b == b'\n')
            .map(|i| pos + i)
            .unwrap_or(out.len());
        let header = String::from_utf8_lossy(&out[pos..eol]).into_owned();
        pos = eol + 1;
        let parts: Vec<&str> = header.split(' ').collect();
        if parts.len() == 3 {
            let size: usize = parts[2].parse().map_err(|_| Error::Git {
                args: "cat-file --batch".into(),
                message: format!("bad header {header:?}"),
            })?;
            let end = (pos + size).min(out.len());
            blobs.insert(parts[0].to_string(), out[pos..end].to_vec());
            pos = end + 1;
        }
    }
    Ok(blobs)
}

fn read_log(repo: &Path) -> Result<Vec<LogEntry>> {
    let out = run_git(
        repo,
        &[
            "log",
            "-z",
            "--first-parent",
            "--reverse",
            "--format=%H%x1f%P%x1f%at%x1f%B",
            "HEAD",
        ],
        None,
    )?;
    let mut entries = Vec::new();
    for record in out.split(|b| *b == 0) {
        let record = String::from_utf8_lossy(record);
        let record = record.trim_start_matches('\n');
        if record.is_empty() {
            continue;
        }
        let mut fields = record.splitn(4, '\x1f');
        let id = fields.next().unwrap_or_default().trim().to_string();
        let parents = fields
            .next()
            .unwrap_or_default()
            .split_whitespace()
            .map(str::to_string)
            .collect();
        let author_time_s = fields
            .next()
            .unwrap_or_default()
            .trim()
            .parse()
            .unwrap_or(0);
        let message = fields.next().unwrap_or_default().trim_end().to_string();
        entries.push(LogEntry {
            id,
            parents,
            author_time_s,
            message,
        });
    }
    Ok(entries)
}

fn read_repository(repo: &Path, user: &UserRef) -> Result<ShadowHistory> {
    if !repo.is_dir() {
        return Err(Error::io(
            repo,
            std::io::Error::new(
                std::io::ErrorKind::NotFound,
                "repository directory not found",
            ),
        ));
    }
    if run_git(
        repo,
        &["rev-parse", "--verify", "-q", "HEAD^{commit}"],
        None,
    )
    .is_err()
    {
        return Err(Error::EmptyRepository { path: repo.into() });
    }
    let log = read_log(repo)?;
    if log.is_empty() {
        return Err(Error::EmptyRepository { path: repo.into() });
    }

    let mut warnings = Vec::new();
    let mut stdin = String::new();
    for entry in &log {
        if entry.parents.len() > 1 {
            warnings.push(format!(
                "merge commit {} encountered; following first parent",
                entry.id
            ));
        }
        match entry.parents.first() {
            Some(parent) => stdin.push_str(&format!("{} {}\n", entry.id, parent)),
            None => stdin.push_str(&format!("{}\n", entry.id)),
        }
    }
    let raw = run_git(
        repo,
        &[
            "diff-tree",
            "--stdin",
            "--always",
            "--root",
            "-r",
            "-z",
            "-M",
            "--raw",
            "--no-abbrev",
        ],
        Some(stdin.into_bytes()),
    )?;
    let changes = parse_diff_tree(&raw);

    let mut wanted: Vec<String> = changes
        .values()
        .flatten()
        .flat_map(|c| c.old_blob.iter().chain(c.new_blob.iter()).cloned())
        .collect();
    wanted.sort();
    wanted.dedup();
    let blobs = read_blobs(repo, &wanted)?;
    let blob = |id: &Option<String>| id.as_ref().and_then(|id| blobs.get(id)).map(Vec::as_slice);

    let mut commits = Vec::with_capacity(log.len());
    let mut prev_ts: Option<i64> = None;
    for (seq, entry) in log.into_iter().enumerate() {
        let timestamp_ms = entry.author_time_s * 1000;
        if prev_ts.is_some_and(|p| timestamp_ms < p) {
            warnings.push(format!(
                "commit {} is older than its first parent; timeline re-sorts it",
                entry.id
            ));
        }
        prev_ts = Some(timestamp_ms);

        let label = parse_commit_message(&entry.message);
        let mut file_diffs: Vec<FileDiff> = Vec::new();
        for change in changes.get(&entry.id).into_iter().flatten() {
            let old = blob(&change.old_blob).unwrap_or_default();
            let new = blob(&change.new_blob).unwrap_or_default();
            let (old, new) = match change.status {
                'A' => (None, Some(new)),
                'D' => (Some(old), None),
                _ => (Some(old), Some(new)),
            };
            let mut diff = compute_file_diff(old, new, &change.new_path);
            if change.status == 'R' {
                diff.change = FileChange::Rename;
                diff.rename_from = Some(change.old_path.clone());
            }
            file_diffs.push(diff);
        }
        let (rename_from, rename_to) = match (&label.kind, label.rename) {
            (CommitKind::Rename, Some((from, to))) => (Some(from), Some(to)),
            _ => (None, None),
        };
        commits.push(ShadowCommit {
            seq: seq as u32,
            commit_id: entry.id,
            user: user.clone(),
            timestamp_ms,
            kind: label.kind,
            message: Some(entry.message),
            file_diffs,
            rename_from,
            rename_to,
        });
    }
    Ok(ShadowHistory { commits, warnings })
}

/// Read first-parent history from HEAD, oldest first.
pub fn read_shadow_history(source: &RepoSource, user: &UserRef) -> Result<ShadowHistory> {
    match source {
        RepoSource::Directory(dir) => read_repository(dir, user),
        RepoSource::Bundle(bundle) => {
            let tmp = tempfile::tempdir().map_err(|e| Error::io(std::env::temp_dir(), e))?;
            let target = tmp.path().join("repo");
            let bundle_arg = bundle.to_string_lossy().into_owned();
            let target_arg = target.to_string_lossy().into_owned();
            run_git(
                tmp.path(),
                &["clone", "--bare", "-q", &bundle_arg, &target_arg],
                None,
            )?;
            read_repository(&target, user)
        }
    }
}
