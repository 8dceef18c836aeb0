//! Compares attributions against synthetic ground truth.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Attribution, MatchClass, Origin, Timeline, UserRef};
use crate::synth::{GroundTruth, TruthEntry};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OriginMetrics {
    pub truth: usize,
    pub predicted: usize,
    pub true_positive: usize,
    /// `None` when nothing was predicted with this origin.
    pub precision: Option<f64>,
    /// `None` when the truth has no entry with this origin.
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mismatch {
    pub user_hash: UserRef,
    pub commit_seq: u32,
    pub file_path: String,
    pub expected: Origin,
    pub expected_request_id: Option<String>,
    pub predicted: Origin,
    pub predicted_request_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub n_entries: usize,
    pub n_correct: usize,
    pub per_origin: BTreeMap<Origin, OriginMetrics>,
    /// Match classes of the attributions predicted as Copilot.
    pub copilot_match_classes: BTreeMap<MatchClass, usize>,
    pub mismatches: Vec<Mismatch>,
}

impl ScoreReport {
    pub fn is_exact(&self) -> bool {
        self.n_correct == self.n_entries && self.mismatches.is_empty()
    }
}

type Key = (UserRef, u32, String);

/// Join truth entries with the attributions in `timelines` on
/// (user, commit sequence, file path). Only commit-files with added lines
/// take part. Any key present on one side and missing on the other is an
/// error: the truth does not describe this corpus.
pub fn score_attributions(truth: &GroundTruth, timelines: &[Timeline]) -> Result<ScoreReport> {
    let mut predicted: BTreeMap<Key, &Attribution> = BTreeMap::new();
    for t in timelines {
        let by_id: BTreeMap<&str, &crate::model::ShadowCommit> = t
            .commits
            .iter()
            .map(|c| (c.commit_id.as_str(), c))
            .collect();
        for a in &t.attributions {
            let commit = by_id.get(a.commit_id.as_str()).ok_or_else(|| {
                Error::Score(format!(
                    "attribution references unknown commit {}",
                    a.commit_id
                ))
            })?;
            let has_added = commit
                .file_diffs
                .iter()
                .any(|d| d.file_path == a.file_path && !d.added_lines.is_empty());
            if has_added {
                predicted.insert((t.user.clone(), commit.seq, a.file_path.clone()), a);
            }
        }
    }
    let mut expected: BTreeMap<Key, &TruthEntry> = BTreeMap::new();
    for e in &truth.entries {
        let key = (e.user_hash.clone(), e.commit_seq, e.file_path.clone());
        if expected.insert(key, e).is_some() {
            return Err(Error::Score(format!(
                "duplicate truth entry for commit {} file {}",
                e.commit_seq, e.file_path
            )));
        }
    }
    let expected_keys: BTreeSet<&Key> = expected.keys().collect();
    let predicted_keys: BTreeSet<&Key> = predicted.keys().collect();
    if let Some(k) = expected_keys.symmetric_difference(&predicted_keys).next() {
        let side = if expected.contains_key(*k) {
            "truth entry has no matching commit-file in the corpus"
        } else {
            "corpus commit-file has no truth entry"
        };
        return Err(Error::Score(format!(
            "{side}: user {} commit {} file {}",
            k.0, k.1, k.2
        )));
    }

    let mut per_origin: BTreeMap<Origin, (usize, usize, usize)> = BTreeMap::new();
    for o in [Origin::Human, Origin::Copilot, Origin::ExternalSuspected] {
        per_origin.insert(o, (0, 0, 0));
    }
    let mut copilot_match_classes = BTreeMap::new();
    let mut mismatches = Vec::new();
    let mut n_correct = 0;
    for (key, e) in &expected {
        let a = predicted[key];
        per_origin.get_mut(&e.origin).expect("all origins").0 += 1;
        per_origin.get_mut(&a.origin).expect("all origins").1 += 1;
        if a.origin == Origin::Copilot {
            *copilot_match_classes.entry(a.match_class).or_insert(0) += 1;
        }
        let correct = a.origin == e.origin
            && (e.origin != Origin::Copilot || a.matched_request_id == e.request_id);
        if correct {
            n_correct += 1;
            per_origin.get_mut(&e.origin).expect("all origins").2 += 1;
        } else {
            mismatches.push(Mismatch {
                user_hash: key.0.clone(),
                commit_seq: key.1,
                file_path: key.2.clone(),
                expected: e.origin,
                expected_request_id: e.request_id.clone(),
                predicted: a.origin,
                predicted_request_id: a.matched_request_id.clone(),
            });
        }
    }
    let per_origin = per_origin
        .into_iter()
        .map(|(o, (truth, predicted, tp))| {
            let precision = (predicted > 0).then(|| tp as f64 / predicted as f64);
            let recall = (truth > 0).then(|| tp as f64 / truth as f64);
            let f1 = match (precision, recall) {
                (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
                (Some(_), Some(_)) => Some(0.0),
                _ => None,
            };
            (
                o,
                OriginMetrics {
                    truth,
                    predicted,
                    true_positive: tp,
                    precision,
                    recall,
                    f1,
                },
            )
        })
        .collect();
    Ok(ScoreReport {
        n_entries: expected.len(),
        n_correct,
        per_origin,
        copilot_match_classes,
        mismatches,
    })
}
