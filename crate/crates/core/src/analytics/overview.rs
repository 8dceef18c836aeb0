use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{EventKind, Timeline, UserRef};

pub const DEFAULT_BINS: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserOverview {
    pub user: UserRef,
    /// Copilot edits over all edits; `None` for users without edits.
    pub ai_edit_share_overall: Option<f64>,
    pub event_counts: BTreeMap<EventKind, u64>,
    pub n_events: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverviewAggregate {
    pub bins: usize,
    pub per_user: Vec<UserOverview>,
    /// Event counts per kind over normalized project progress.
    pub density: BTreeMap<EventKind, Vec<u64>>,
}

/// Bin of a progress value in [0, 1]; bins are closed on the right, with
/// 0 falling in the first bin.
pub fn progress_bin(progress: f64, bins: usize) -> usize {
    let scaled = (progress.clamp(0.0, 1.0) * bins as f64).ceil() as usize;
    scaled.saturating_sub(1).min(bins - 1)
}

fn compare_share(a: &UserOverview, b: &UserOverview) -> Ordering {
    match (a.ai_edit_share_overall, b.ai_edit_share_overall) {
        (Some(x), Some(y)) => y.total_cmp(&x),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => Ordering::Equal,
    }
    .then_with(|| a.user.cmp(&b.user))
}

/// Cross-user overview: per-user AI edit share (sorted, highest first) and
/// event density over each user's normalized time span.
pub fn overview(timelines: &[Timeline], bins: usize) -> OverviewAggregate {
    let bins = bins.max(1);
    let mut density: BTreeMap<EventKind, Vec<u64>> = EventKind::ALL
        .iter()
        .map(|k| (*k, vec![0u64; bins]))
        .collect();
    let mut per_user = Vec::with_capacity(timelines.len());

    for t in timelines {
        let mut counts: BTreeMap<EventKind, u64> = EventKind::ALL.iter().map(|k| (*k, 0)).collect();
        let t_min = t.events.iter().map(|e| e.timestamp_ms).min();
        let t_max = t.events.iter().map(|e| e.timestamp_ms).max();
        for e in &t.events {
            *counts.get_mut(&e.kind).expect("all kinds present") += 1;
            let bin = match (t_min, t_max) {
                (Some(lo), Some(hi)) if hi > lo => {
                    progress_bin((e.timestamp_ms - lo) as f64 / (hi - lo) as f64, bins)
                }
                _ => 0,
            };
            density.get_mut(&e.kind).expect("all kinds present")[bin] += 1;
        }
        let copilot = counts[&EventKind::CopilotEdit];
        let edits = copilot + counts[&EventKind::HumanEdit] + counts[&EventKind::ExternalEdit];
        per_user.push(UserOverview {
            user: t.user.clone(),
            ai_edit_share_overall: (edits > 0).then(|| copilot as f64 / edits as f64),
            n_events: t.events.len() as u64,
            event_counts: counts,
        });
    }
    per_user.sort_by(compare_share);
    OverviewAggregate {
        bins,
        per_user,
        density,
    }
}
