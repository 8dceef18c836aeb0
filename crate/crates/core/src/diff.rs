//! Line-level diffs between two versions of a file.
//!
//! The edit script is a minimal one (a longest common subsequence of lines),
//! computed with the linear-space divide-and-conquer form of Myers' algorithm.

use std::ops::Range;

use crate::model::{FileChange, FileDiff, Hunk};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffOp {
    Equal { old: usize, new: usize },
    Delete { old: usize },
    Insert { new: usize },
}

/// Split file content into lines without terminators; the flag reports
/// whether the content ended with a newline.
pub fn split_lines(content: &str) -> (Vec<&str>, bool) {
    if content.is_empty() {
        return (Vec::new(), false);
    }
    let trailing = content.ends_with('\n');
    let body = if trailing {
        &content[..content.len() - 1]
    } else {
        content
    };
    (body.split('\n').collect(), trailing)
}

pub fn join_lines<S: AsRef<str>>(lines: &[S], trailing_newline: bool) -> String {
    let mut out = String::new();
    for (i, line) in lines.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(line.as_ref());
    }
    if trailing_newline && !lines.is_empty() {
        out.push('\n');
    }
    out
}

/// Minimal edit script turning `old` into `new`.
pub fn diff_lines<T: PartialEq>(old: &[T], new: &[T]) -> Vec<DiffOp> {
    let max_d = (old.len() + new.len()).div_ceil(2) + 1;
    let mut vf = V::new(max_d);
    let mut vb = V::new(max_d);
    let mut ops = Vec::with_capacity(old.len().max(new.len()));
    conquer(
        old,
        0..old.len(),
        new,
        0..new.len(),
        &mut vf,
        &mut vb,
        &mut ops,
    );
    ops
}

struct V {
    offset: isize,
    v: Vec<usize>,
}

impl V {
    fn new(max_d: usize) -> Self {
        V {
            offset: max_d as isize,
            v: vec![0; 2 * max_d + 2],
        }
    }
}

impl std::ops::Index<isize> for V {
    type Output = usize;
    fn index(&self, k: isize) -> &usize {
        &self.v[(k + self.offset) as usize]
    }
}

impl std::ops::IndexMut<isize> for V {
    fn index_mut(&mut self, k: isize) -> &mut usize {
        &mut self.v[(k + self.offset) as usize]
    }
}

fn common_prefix<T: PartialEq>(old: &[T], o: Range<usize>, new: &[T], n: Range<usize>) -> usize {
    old[o]
        .iter()
        .zip(&new[n])
        .take_while(|(a, b)| a == b)
        .count()
}

fn common_suffix<T: PartialEq>(old: &[T], o: Range<usize>, new: &[T], n: Range<usize>) -> usize {
    old[o]
        .iter()
        .rev()
        .zip(new[n].iter().rev())
        .take_while(|(a, b)| a == b)
        .count()
}

fn find_middle_snake<T: PartialEq>(
    old: &[T],
    o: Range<usize>,
    new: &[T],
    nr: Range<usize>,
    vf: &mut V,
    vb: &mut V,
) -> Option<(usize, usize)> {
    let n = o.len();
    let m = nr.len();
    let delta = n as isize - m as isize;
    let odd = delta & 1 == 1;
    vf[1] = 0;
    vb[1] = 0;
    let d_max = ((n + m).div_ceil(2) + 1) as isize;
    for d in 0..d_max {
        let mut k = d;
        while k >= -d {
            let mut x = if k == -d || (k != d && vf[k - 1] < vf[k + 1]) {
                vf[k + 1]
            } else {
                vf[k - 1] + 1
            };
            let y = (x as isize - k) as usize;
            let (x0, y0) = (x, y);
            if x < n && y < m {
                x += common_prefix(old, o.start + x..o.end, new, nr.start + y..nr.end);
            }
            vf[k] = x;
            if odd && (k - delta).abs() < d && vf[k] + vb[-(k - delta)] >= n {
                return Some((o.start + x0, nr.start + y0));
            }
            k -= 2;
        }
        let mut k = d;
        while k >= -d {
            let mut x = if k == -d || (k != d && vb[k - 1] < vb[k + 1]) {
                vb[k + 1]
            } else {
                vb[k - 1] + 1
            };
            let mut y = (x as isize - k) as usize;
            if x < n && y < m {
                let adv = common_suffix(
                    old,
                    o.start..o.start + n - x,
                    new,
                    nr.start..nr.start + m - y,
                );
                x += adv;
                y += adv;
            }
            vb[k] = x;
            if !odd && (k - delta).abs() <= d && vb[k] + vf[-(k - delta)] >= n {
                return Some((o.start + n - x, nr.start + m - y));
            }
            k -= 2;
        }
    }
    None
}

fn conquer<T: PartialEq>(
    old: &[T],
    mut o: Range<usize>,
    new: &[T],
    mut nr: Range<usize>,
    vf: &mut V,
    vb: &mut V,
    ops: &mut Vec<DiffOp>,
) {
    let prefix = common_prefix(old, o.clone(), new, nr.clone());
    for i in 0..prefix {
        ops.push(DiffOp::Equal {
            old: o.start + i,
            new: nr.start + i,
        });
    }
    o.start += prefix;
    nr.start += prefix;
    let suffix = common_suffix(old, o.clone(), new, nr.clone());
    o.end -= suffix;
    nr.end -= suffix;
    let (suffix_old, suffix_new) = (o.end, nr.end);

    if o.is_empty() {
        ops.extend(nr.clone().map(|new| DiffOp::Insert { new }));
    } else if nr.is_empty() {
        ops.extend(o.clone().map(|old| DiffOp::Delete { old }));
    } else if let Some((x, y)) = find_middle_snake(old, o.clone(), new, nr.clone(), vf, vb) {
        conquer(old, o.start..x, new, nr.start..y, vf, vb, ops);
        conquer(old, x..o.end, new, y..nr.end, vf, vb, ops);
    } else {
        ops.extend(o.clone().map(|old| DiffOp::Delete { old }));
        ops.extend(nr.clone().map(|new| DiffOp::Insert { new }));
    }

    for i in 0..suffix {
        ops.push(DiffOp::Equal {
            old: suffix_old + i,
            new: suffix_new + i,
        });
    }
}

fn char_len<S: AsRef<str>>(lines: &[S]) -> u64 {
    lines
        .iter()
        .map(|l| l.as_ref().chars().count() as u64)
        .sum()
}

/// Diff two optional versions of `path`; `None` means the file does not exist
/// on that side. Content containing a NUL byte is treated as binary.
pub fn compute_file_diff(old: Option<&[u8]>, new: Option<&[u8]>, path: &str) -> FileDiff {
    let change = match (old, new) {
        (None, Some(_)) => FileChange::Create,
        (Some(_), None) => FileChange::Delete,
        _ => FileChange::Modify,
    };
    let is_binary = |b: Option<&[u8]>| b.is_some_and(|b| b.contains(&0));
    if is_binary(old) || is_binary(new) {
        let old_len = old.map_or(0, |b| b.len()) as u64;
        let new_len = new.map_or(0, |b| b.len()) as u64;
        return FileDiff {
            file_path: path.to_string(),
            change,
            rename_from: None,
            added_lines: Vec::new(),
            removed_lines: Vec::new(),
            net_new_chars: new_len.saturating_sub(old_len),
            binary: true,
            hunks: Vec::new(),
            trailing_newline: false,
        };
    }
    let old_text = old.map(String::from_utf8_lossy);
    let new_text = new.map(String::from_utf8_lossy);
    compute_text_diff(old_text.as_deref(), new_text.as_deref(), path, change)
}

/// Text-only variant of [`compute_file_diff`].
pub fn compute_text_file_diff(old: Option<&str>, new: Option<&str>, path: &str) -> FileDiff {
    compute_file_diff(old.map(str::as_bytes), new.map(str::as_bytes), path)
}

fn compute_text_diff(
    old: Option<&str>,
    new: Option<&str>,
    path: &str,
    change: FileChange,
) -> FileDiff {
    let (old_lines, _) = split_lines(old.unwrap_or(""));
    let (new_lines, trailing) = split_lines(new.unwrap_or(""));
    let ops = diff_lines(&old_lines, &new_lines);

    let mut added = Vec::new();
    let mut removed = Vec::new();
    let mut hunks: Vec<Hunk> = Vec::new();
    let mut open: Option<Hunk> = None;
    let (mut old_pos, mut new_pos) = (0usize, 0usize);
    for op in ops {
        match op {
            DiffOp::Equal { old, new } => {
                if let Some(h) = open.take() {
                    hunks.push(h);
                }
                old_pos = old + 1;
                new_pos = new + 1;
            }
            DiffOp::Delete { old } => {
                let h = open.get_or_insert(Hunk {
                    old_start: old_pos,
                    old_len: 0,
                    new_start: new_pos,
                    new_len: 0,
                });
                h.old_len += 1;
                removed.push(old_lines[old].to_string());
                old_pos = old + 1;
            }
            DiffOp::Insert { new } => {
                let h = open.get_or_insert(Hunk {
                    old_start: old_pos,
                    old_len: 0,
                    new_start: new_pos,
                    new_len: 0,
                });
                h.new_len += 1;
                added.push(new_lines[new].to_string());
                new_pos = new + 1;
            }
        }
    }
    if let Some(h) = open {
        hunks.push(h);
    }

    FileDiff {
        file_path: path.to_string(),
        change,
        rename_from: None,
        net_new_chars: char_len(&added).saturating_sub(char_len(&removed)),
        added_lines: added,
        removed_lines: removed,
        binary: false,
        hunks,
        trailing_newline: new.is_some() && trailing,
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ApplyError {
    #[error("binary diff for {0} cannot be replayed")]
    Binary(String),
    #[error("hunk at old line {line} of {path} does not match the base content")]
    Mismatch { path: String, line: usize },
}

/// Replay a diff on top of the parent version. Returns `None` when the diff
/// deletes the file.
pub fn apply_file_diff(old: Option<&str>, diff: &FileDiff) -> Result<Option<String>, ApplyError> {
    if diff.binary {
        return Err(ApplyError::Binary(diff.file_path.clone()));
    }
    if diff.change == FileChange::Delete {
        return Ok(None);
    }
    let (old_lines, _) = split_lines(old.unwrap_or(""));
    let mut out: Vec<&str> = Vec::with_capacity(old_lines.len() + diff.added_lines.len());
    let (mut cursor, mut removed_at, mut added_at) = (0usize, 0usize, 0usize);
    for h in &diff.hunks {
        let mismatch = || ApplyError::Mismatch {
            path: diff.file_path.clone(),
            line: h.old_start,
        };
        if h.old_start < cursor || h.old_start + h.old_len > old_lines.len() {
            return Err(mismatch());
        }
        out.extend_from_slice(&old_lines[cursor..h.old_start]);
        let expected = diff
            .removed_lines
            .get(removed_at..removed_at + h.old_len)
            .ok_or_else(mismatch)?;
        if old_lines[h.old_start..h.old_start + h.old_len]
            .iter()
            .zip(expected)
            .any(|(a, b)| *a != b)
        {
            return Err(mismatch());
        }
        let added = diff
            .added_lines
            .get(added_at..added_at + h.new_len)
            .ok_or_else(mismatch)?;
        out.extend(added.iter().map(String::as_str));
        removed_at += h.old_len;
        added_at += h.new_len;
        cursor = h.old_start + h.old_len;
    }
    out.extend_from_slice(&old_lines[cursor..]);
    Ok(Some(join_lines(&out, diff.trailing_newline)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diff(old: Option<&str>, new: Option<&str>) -> FileDiff {
        compute_text_file_diff(old, new, "f.txt")
    }

    #[test]
    fn identical_content_has_no_changes() {
        let d = diff(Some("a\nb\n"), Some("a\nb\n"));
        assert!(d.added_lines.is_empty());
        assert!(d.removed_lines.is_empty());
        assert_eq!(d.net_new_chars, 0);
        assert!(d.hunks.is_empty());
    }

    #[test]
    fn creation_adds_every_line() {
        let d = diff(None, Some("x\ny\n"));
        assert_eq!(d.added_lines, ["x", "y"]);
        assert!(d.removed_lines.is_empty());
        assert_eq!(d.net_new_chars, 2);
        assert_eq!(d.change, FileChange::Create);
    }

    #[test]
    fn single_line_replacement() {
        let d = diff(Some("a\nb\nc\n"), Some("a\nB\nc\n"));
        assert_eq!(d.added_lines, ["B"]);
        assert_eq!(d.removed_lines, ["b"]);
        assert_eq!(d.net_new_chars, 0);
        assert_eq!(
            d.hunks,
            [Hunk {
                old_start: 1,
                old_len: 1,
                new_start: 1,
                new_len: 1
            }]
        );
    }

    #[test]
    fn nul_bytes_mark_binary() {
        let d = compute_file_diff(Some(b"ab"), Some(b"a\0bcd"), "img.bin");
        assert!(d.binary);
        assert!(d.added_lines.is_empty() && d.removed_lines.is_empty());
        assert_eq!(d.net_new_chars, 3);
        let shrink = compute_file_diff(Some(b"a\0bcd"), Some(b"a"), "img.bin");
        assert_eq!(shrink.net_new_chars, 0);
        assert!(apply_file_diff(Some("ab"), &d).is_err());
    }

    #[test]
    fn deletion_removes_every_line() {
        let d = diff(Some("a\nb"), None);
        assert_eq!(d.removed_lines, ["a", "b"]);
        assert_eq!(d.change, FileChange::Delete);
        assert_eq!(apply_file_diff(Some("a\nb"), &d).unwrap(), None);
    }

    #[test]
    fn trailing_newline_changes_replay() {
        for (old, new) in [
            ("a", "a\n"),
            ("a\n", "a"),
            ("", "\n"),
            ("\n", ""),
            ("x\n\n", "x\n"),
        ] {
            let d = diff(Some(old), Some(new));
            assert_eq!(
                apply_file_diff(Some(old), &d).unwrap().as_deref(),
                Some(new),
                "{old:?} -> {new:?}"
            );
        }
    }

    #[test]
    fn replay_rejects_wrong_base() {
        let d = diff(Some("a\nb\nc\n"), Some("a\nB\nc\n"));
        assert!(matches!(
            apply_file_diff(Some("a\nz\nc\n"), &d),
            Err(ApplyError::Mismatch { .. })
        ));
    }
}
