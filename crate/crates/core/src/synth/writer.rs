use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{FileAction, SynthCorpus, SynthUser};
use crate::chat::ChatFile;
use crate::error::{Error, Result};
use crate::shadow::run_git;

/// On-disk form of each user's shadow history.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ShadowLayout {
    /// `shadow/<user_hash>/`, a bare repository.
    #[default]
    Repository,
    /// `shadow/<user_hash>.bundle`.
    Bundle,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Write `chats/`, `shadow/` and `truth.json` under `out_dir`, which must be
/// absent or empty.
pub fn write_corpus(corpus: &SynthCorpus, out_dir: &Path, layout: ShadowLayout) -> Result<()> {
    if out_dir.exists() {
        let mut entries = fs::read_dir(out_dir).map_err(|e| Error::io(out_dir, e))?;
        if entries.next().is_some() {
            return Err(Error::OutputNotEmpty {
                path: out_dir.to_path_buf(),
            });
        }
    }
    let chats = out_dir.join("chats");
    let shadow = out_dir.join("shadow");
    for dir in [&chats, &shadow] {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    for user in &corpus.users {
        for session in &user.sessions {
            write_json(
                &chats.join(format!("{}.json", session.session_id)),
                &ChatFile::from_session(session),
            )?;
        }
        match layout {
            ShadowLayout::Repository => {
                write_repository(user, &shadow.join(user.user.as_str()))?;
            }
            ShadowLayout::Bundle => {
                let tmp = tempfile::tempdir().map_err(|e| Error::io(std::env::temp_dir(), e))?;
                let repo = tmp.path().join("repo");
                write_repository(user, &repo)?;
                let bundle = shadow.join(format!("{}.bundle", user.user.as_str()));
                let bundle_arg = bundle.to_string_lossy().into_owned();
                run_git(
                    &repo,
                    &["bundle", "create", "-q", &bundle_arg, "HEAD", "main"],
                    None,
                )?;
            }
        }
    }
    write_json(&out_dir.join("truth.json"), &corpus.truth)
}

fn write_repository(user: &SynthUser, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    run_git(dir, &["init", "-q", "--bare", "-b", "main", "."], None)?;
    run_git(
        dir,
        &["fast-import", "--quiet"],
        Some(fast_import_stream(user)),
    )?;
    Ok(())
}

fn data(out: &mut Vec<u8>, bytes: &[u8]) {
    out.extend_from_slice(format!("data {}\n", bytes.len()).as_bytes());
    out.extend_from_slice(bytes);
    out.push(b'\n');
}

fn fast_import_stream(user: &SynthUser) -> Vec<u8> {
    let mut out = Vec::new();
    for c in &user.commits {
        let mut header = String::new();
        let _ = writeln!(header, "commit refs/heads/main");
        let _ = writeln!(
            header,
            "author shadow <shadow@localhost> {} +0000",
            c.timestamp_s
        );
        let _ = writeln!(
            header,
            "committer shadow <shadow@localhost> {} +0000",
            c.timestamp_s
        );
        out.extend_from_slice(header.as_bytes());
        data(&mut out, c.message().as_bytes());
        match (&c.action, &c.path) {
            (FileAction::Write(content), Some(path)) => {
                out.extend_from_slice(format!("M 100644 inline {}\n", quote(path)).as_bytes());
                data(&mut out, content.as_bytes());
            }
            (FileAction::Delete, Some(path)) => {
                out.extend_from_slice(format!("D {}\n", quote(path)).as_bytes());
            }
            (FileAction::Rename { from }, Some(path)) => {
                out.extend_from_slice(format!("R {} {}\n", quote(from), quote(path)).as_bytes());
            }
            _ => {}
        }
        out.push(b'\n');
    }
    out.extend_from_slice(b"done\n");
    out
}

fn quote(path: &str) -> String {
    format!("\"{}\"", path.replace('\\', "\\\\").replace('"', "\\\""))
}
