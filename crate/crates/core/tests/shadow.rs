use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;

use cotrace_core::diff::compute_text_file_diff;
use cotrace_core::model::{CommitKind, FileChange, UserRef};
use cotrace_core::shadow::{read_shadow_history, RepoSource};
use cotrace_core::Error;
use sha2::{Digest, Sha256};

fn git(dir: &Path, args: &[&str], time: i64) {
    let date = format!("@{time} +0000");
    let status = Command::new("git")
        .arg("-C")
        .arg(dir)
        .args([
            "-c",
            "user.name=t",
            "-c",
            "user.email=t@example.com",
            "-c",
            "commit.gpgsign=false",
        ])
        .args(args)
        .env("GIT_AUTHOR_DATE", &date)
        .env("GIT_COMMITTER_DATE", &date)
        .output()
        .expect("git runs");
    assert!(
        status.status.success(),
        "git {args:?}: {}",
        String::from_utf8_lossy(&status.stderr)
    );
}

fn init(dir: &Path) {
    git(dir, &["init", "-q", "-b", "main"], 0);
}

fn commit_file(dir: &Path, path: &str, content: &str, message: &str, time: i64) {
    let full = dir.join(path);
    fs::create_dir_all(full.parent().unwrap()).unwrap();
    fs::write(full, content).unwrap();
    git(dir, &["add", "-A"], time);
    git(dir, &["commit", "-q", "--allow-empty", "-m", message], time);
}

fn user() -> UserRef {
    UserRef::from_raw("fixture")
}

fn tree_digest(dir: &Path) -> BTreeMap<String, String> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, String>) {
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                let bytes = fs::read(&path).unwrap();
                let hex: String = Sha256::digest(&bytes)
                    .iter()
                    .map(|b| format!("{b:02x}"))
                    .collect();
                out.insert(path.strip_prefix(root).unwrap().display().to_string(), hex);
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

#[test]
fn create_then_save() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    init(dir);
    commit_file(dir, "a.py", "import os\n\nprint(1)\n", "CREATE a.py", 1_000);
    commit_file(
        dir,
        "a.py",
        "import os\n\nprint(2)\nprint(3)\n",
        "SAVE a.py",
        1_030,
    );
    let h = read_shadow_history(&RepoSource::from_path(dir), &user()).unwrap();
    assert!(h.warnings.is_empty(), "{:?}", h.warnings);
    let kinds: Vec<_> = h.commits.iter().map(|c| c.kind.clone()).collect();
    assert_eq!(kinds, [CommitKind::Create, CommitKind::Save]);
    assert_eq!(h.commits[0].timestamp_ms, 1_000_000);
    assert_eq!(h.commits[1].timestamp_ms, 1_030_000);
    assert_eq!(h.commits[0].file_diffs[0].change, FileChange::Create);
    let save = &h.commits[1].file_diffs[0];
    assert_eq!(save.added_lines, ["print(2)", "print(3)"]);
    assert_eq!(save.removed_lines, ["print(1)"]);
    let oracle = compute_text_file_diff(
        Some("import os\n\nprint(1)\n"),
        Some("import os\n\nprint(2)\nprint(3)\n"),
        "a.py",
    );
    assert_eq!(*save, oracle);
    assert_eq!(h.commits.iter().map(|c| c.seq).collect::<Vec<_>>(), [0, 1]);
}

#[test]
fn empty_dirty_snapshot() {
    let tmp = tempfile::tempdir().unwrap();
    init(tmp.path());
    git(
        tmp.path(),
        &["commit", "-q", "--allow-empty", "-m", "DIRTY_SNAPSHOT —"],
        5,
    );
    let h = read_shadow_history(&RepoSource::from_path(tmp.path()), &user()).unwrap();
    assert_eq!(h.commits.len(), 1);
    assert_eq!(h.commits[0].kind, CommitKind::DirtySnapshot);
    assert!(h.commits[0].file_diffs.is_empty());
}

#[test]
fn free_text_message_is_unknown_but_diffed() {
    let tmp = tempfile::tempdir().unwrap();
    init(tmp.path());
    commit_file(tmp.path(), "src/x.py", "x = 1\n", "refactor stuff", 10);
    let h = read_shadow_history(&RepoSource::from_path(tmp.path()), &user()).unwrap();
    assert_eq!(h.commits[0].kind, CommitKind::Unknown);
    assert_eq!(h.commits[0].file_diffs[0].added_lines, ["x = 1"]);
    assert_eq!(h.commits[0].file_diffs[0].file_path, "src/x.py");
}

#[test]
fn rename_delete_and_binary() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    init(dir);
    commit_file(dir, "old.py", "a = 1\nb = 2\nc = 3\n", "CREATE old.py", 10);
    fs::rename(dir.join("old.py"), dir.join("new.py")).unwrap();
    git(dir, &["add", "-A"], 20);
    git(dir, &["commit", "-q", "-m", "RENAME old.py -> new.py"], 20);
    commit_file(dir, "blob.bin", "\0\0\u{1}payload", "CREATE blob.bin", 30);
    fs::remove_file(dir.join("new.py")).unwrap();
    git(dir, &["add", "-A"], 40);
    git(dir, &["commit", "-q", "-m", "DELETE new.py"], 40);

    let h = read_shadow_history(&RepoSource::from_path(dir), &user()).unwrap();
    let rename = &h.commits[1];
    assert_eq!(rename.kind, CommitKind::Rename);
    assert_eq!(rename.rename_from.as_deref(), Some("old.py"));
    assert_eq!(rename.rename_to.as_deref(), Some("new.py"));
    assert_eq!(rename.file_diffs.len(), 1);
    assert_eq!(rename.file_diffs[0].change, FileChange::Rename);
    assert!(rename.file_diffs[0].added_lines.is_empty());

    let binary = &h.commits[2].file_diffs[0];
    assert!(binary.binary);
    assert!(binary.added_lines.is_empty());
    assert_eq!(binary.net_new_chars, 10);

    let delete = &h.commits[3].file_diffs[0];
    assert_eq!(delete.change, FileChange::Delete);
    assert_eq!(delete.removed_lines, ["a = 1", "b = 2", "c = 3"]);
    assert_eq!(delete.net_new_chars, 0);
}

#[test]
fn merge_follows_first_parent_with_warning() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    init(dir);
    commit_file(dir, "a.py", "1\n", "CREATE a.py", 10);
    git(dir, &["checkout", "-q", "-b", "side"], 10);
    commit_file(dir, "b.py", "side\n", "CREATE b.py", 20);
    git(dir, &["checkout", "-q", "main"], 20);
    commit_file(dir, "a.py", "1\n2\n", "SAVE a.py", 30);
    git(
        dir,
        &["merge", "-q", "--no-ff", "-m", "SAVE b.py", "side"],
        40,
    );
    let h = read_shadow_history(&RepoSource::from_path(dir), &user()).unwrap();
    assert_eq!(h.commits.len(), 3);
    assert!(
        h.warnings.iter().any(|w| w.contains("merge")),
        "{:?}",
        h.warnings
    );
    // Against its first parent the merge brings in b.py.
    assert_eq!(h.commits[2].file_diffs[0].file_path, "b.py");
}

#[test]
fn bundle_reads_like_the_repository() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("repo");
    fs::create_dir(&dir).unwrap();
    init(&dir);
    commit_file(&dir, "a.py", "x\n", "CREATE a.py", 10);
    commit_file(&dir, "a.py", "x\ny\n", "SAVE a.py", 20);
    let bundle = tmp.path().join("u.bundle");
    git(
        &dir,
        &[
            "bundle",
            "create",
            "-q",
            bundle.to_str().unwrap(),
            "HEAD",
            "main",
        ],
        0,
    );
    let source = RepoSource::from_path(&bundle);
    assert!(matches!(source, RepoSource::Bundle(_)));
    let from_bundle = read_shadow_history(&source, &user()).unwrap();
    let from_repo = read_shadow_history(&RepoSource::from_path(&dir), &user()).unwrap();
    assert_eq!(from_bundle.commits, from_repo.commits);
}

#[test]
fn reading_is_read_only_and_idempotent() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    init(dir);
    commit_file(dir, "a.py", "x\n", "CREATE a.py", 10);
    commit_file(dir, "a.py", "x\ny\n", "SAVE a.py", 20);
    let before = tree_digest(dir);
    let first = read_shadow_history(&RepoSource::from_path(dir), &user()).unwrap();
    let second = read_shadow_history(&RepoSource::from_path(dir), &user()).unwrap();
    assert_eq!(first, second);
    assert_eq!(before, tree_digest(dir));
}

#[test]
fn empty_or_missing_repository_is_fatal() {
    let tmp = tempfile::tempdir().unwrap();
    init(tmp.path());
    assert!(matches!(
        read_shadow_history(&RepoSource::from_path(tmp.path()), &user()),
        Err(Error::EmptyRepository { .. })
    ));
    assert!(read_shadow_history(&RepoSource::from_path(tmp.path().join("nope")), &user()).is_err());
}
