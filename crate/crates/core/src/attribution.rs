//! Decides who wrote each committed change: an AI response (matched through
//! its text edit groups), a human, or a suspected outside source.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    Attribution, ChatSession, ExtraFields, FileDiff, MatchClass, Origin, ShadowCommit,
    TextEditGroup, TimestampMs,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AttributionConfig {
    /// Maximum seconds from an AI request to the commit it explains.
    pub window_s: f64,
    pub full_threshold: f64,
    pub partial_threshold: f64,
    /// Unmatched edits adding more characters than this are flagged external.
    pub external_size_chars: u64,
    pub external_wpm: f64,
    pub chars_per_word: f64,
}

impl Default for AttributionConfig {
    fn default() -> Self {
        AttributionConfig {
            window_s: 300.0,
            full_threshold: 1.0,
            partial_threshold: 0.5,
            external_size_chars: 1000,
            external_wpm: 100.0,
            chars_per_word: 5.0,
        }
    }
}

impl AttributionConfig {
    pub fn check(&self) -> Result<()> {
        let ok = self.partial_threshold > 0.0
            && self.partial_threshold <= self.full_threshold
            && self.full_threshold <= 1.0
            && self.window_s > 0.0
            && self.external_wpm > 0.0
            && self.chars_per_word > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "attribution requires 0 < partial ({}) <= full ({}) <= 1, window_s ({}) > 0, \
                 external_wpm ({}) > 0, chars_per_word ({}) > 0",
                self.partial_threshold,
                self.full_threshold,
                self.window_s,
                self.external_wpm,
                self.chars_per_word
            )))
        }
    }

    fn window_ms(&self) -> f64 {
        self.window_s * 1000.0
    }
}

/// A scored pairing of one text edit group with one commit-file.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchCandidate {
    pub request_id: String,
    pub file_path: String,
    pub commit_id: String,
    pub score: f64,
    pub time_delta_s: f64,
    teg_index: usize,
}

/// Trim each line, collapse inner whitespace runs to one space, drop blanks.
pub fn normalize_lines<S: AsRef<str>>(lines: &[S]) -> Vec<String> {
    lines
        .iter()
        .filter_map(|line| {
            let collapsed = line
                .as_ref()
                .split_whitespace()
                .collect::<Vec<_>>()
                .join(" ");
            (!collapsed.is_empty()).then_some(collapsed)
        })
        .collect()
}

/// Fraction of normalized proposed lines found, as a multiset, among the
/// normalized added lines. `None` when the proposal is whitespace only.
pub fn match_score(teg: &TextEditGroup, diff: &FileDiff) -> Option<f64> {
    score_normalized(
        &normalize_lines(&teg.proposed_lines),
        &normalize_lines(&diff.added_lines),
    )
}

fn score_normalized(proposed: &[String], added: &[String]) -> Option<f64> {
    if proposed.is_empty() {
        return None;
    }
    let mut available: HashMap<&str, usize> = HashMap::new();
    for line in added {
        *available.entry(line.as_str()).or_default() += 1;
    }
    let mut hits = 0usize;
    for line in proposed {
        if let Some(n) = available.get_mut(line.as_str()) {
            if *n > 0 {
                *n -= 1;
                hits += 1;
            }
        }
    }
    Some(hits as f64 / proposed.len() as f64)
}

/// Typing speed implied by `net_new_chars` over `dt_ms`, in words per minute.
/// `None` when no positive interval exists.
pub fn implied_wpm(net_new_chars: u64, dt_ms: i64, config: &AttributionConfig) -> Option<f64> {
    if dt_ms <= 0 {
        return None;
    }
    let minutes = dt_ms as f64 / 60_000.0;
    Some((net_new_chars as f64 / config.chars_per_word) / minutes)
}

/// External-source heuristic for a commit-file that no AI proposal explains.
pub fn external_source_flag(
    commit: &ShadowCommit,
    prev_commit_ts: Option<TimestampMs>,
    diff: &FileDiff,
    config: &AttributionConfig,
) -> bool {
    if diff.net_new_chars == 0 {
        return false;
    }
    if diff.net_new_chars > config.external_size_chars {
        return true;
    }
    match prev_commit_ts {
        None => false,
        Some(prev) => match implied_wpm(diff.net_new_chars, commit.timestamp_ms - prev, config) {
            None => true,
            Some(wpm) => wpm > config.external_wpm,
        },
    }
}

struct TegEntry<'a> {
    index: usize,
    request_id: &'a str,
    request_ts: TimestampMs,
    normalized: Vec<String>,
}

fn compare_candidates(a: &MatchCandidate, b: &MatchCandidate) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(a.time_delta_s.total_cmp(&b.time_delta_s))
        .then_with(|| a.request_id.cmp(&b.request_id))
        .then(a.teg_index.cmp(&b.teg_index))
}

/// Attribute every (commit, file) diff of one user.
///
/// Commits are visited in time order (ties by sequence number) so the
/// earliest winning commit consumes each proposal.
pub fn attribute_commits(
    commits: &[ShadowCommit],
    sessions: &[ChatSession],
    config: &AttributionConfig,
) -> Vec<Attribution> {
    let mut by_path: BTreeMap<&str, Vec<TegEntry>> = BTreeMap::new();
    let mut index = 0usize;
    for session in sessions {
        for req in &session.requests {
            for teg in &req.text_edit_groups {
                by_path
                    .entry(teg.file_path.as_str())
                    .or_default()
                    .push(TegEntry {
                        index,
                        request_id: &req.request_id,
                        request_ts: req.timestamp_ms,
                        normalized: normalize_lines(&teg.proposed_lines),
                    });
                index += 1;
            }
        }
    }

    let mut order: Vec<&ShadowCommit> = commits.iter().collect();
    order.sort_by_key(|c| (c.timestamp_ms, c.seq));

    let window_ms = config.window_ms();
    let mut consumed: HashSet<usize> = HashSet::new();
    let mut out = Vec::new();
    let mut prev_ts: Option<TimestampMs> = None;

    for commit in order {
        for diff in &commit.file_diffs {
            let mut best: Option<MatchCandidate> = None;
            if !diff.added_lines.is_empty() {
                let added = normalize_lines(&diff.added_lines);
                for teg in by_path.get(diff.file_path.as_str()).into_iter().flatten() {
                    let delta_ms = commit.timestamp_ms - teg.request_ts;
                    if delta_ms < 0 || delta_ms as f64 > window_ms || consumed.contains(&teg.index)
                    {
                        continue;
                    }
                    let Some(score) = score_normalized(&teg.normalized, &added) else {
                        continue;
                    };
                    let candidate = MatchCandidate {
                        request_id: teg.request_id.to_string(),
                        file_path: diff.file_path.clone(),
                        commit_id: commit.commit_id.clone(),
                        score,
                        time_delta_s: delta_ms as f64 / 1000.0,
                        teg_index: teg.index,
                    };
                    if best
                        .as_ref()
                        .is_none_or(|b| compare_candidates(&candidate, b) == Ordering::Less)
                    {
                        best = Some(candidate);
                    }
                }
            }

            let class = match &best {
                Some(c) if c.score >= config.full_threshold => MatchClass::Full,
                Some(c) if c.score >= config.partial_threshold => MatchClass::Partial,
                _ => MatchClass::Unmatched,
            };
            let attribution = if class == MatchClass::Unmatched {
                let external = external_source_flag(commit, prev_ts, diff, config);
                let wpm = prev_ts.filter(|_| diff.net_new_chars > 0).and_then(|prev| {
                    implied_wpm(diff.net_new_chars, commit.timestamp_ms - prev, config)
                });
                Attribution {
                    commit_id: commit.commit_id.clone(),
                    file_path: diff.file_path.clone(),
                    origin: if external {
                        Origin::ExternalSuspected
                    } else {
                        Origin::Human
                    },
                    match_class: class,
                    match_score: best.as_ref().map_or(0.0, |c| c.score),
                    matched_request_id: None,
                    time_delta_s: None,
                    implied_wpm: wpm,
                    extra: ExtraFields::new(),
                }
            } else {
                let c = best.expect("matched class has a candidate");
                consumed.insert(c.teg_index);
                Attribution {
                    commit_id: c.commit_id,
                    file_path: c.file_path,
                    origin: Origin::Copilot,
                    match_class: class,
                    match_score: c.score,
                    matched_request_id: Some(c.request_id),
                    time_delta_s: Some(c.time_delta_s),
                    implied_wpm: None,
                    extra: ExtraFields::new(),
                }
            };
            out.push(attribution);
        }
        prev_ts = Some(commit.timestamp_ms);
    }
    out
}
