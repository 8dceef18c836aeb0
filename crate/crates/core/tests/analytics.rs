use cotrace_core::analytics::trend::pearson;
use cotrace_core::analytics::{ai_share_trend, overview, segment_sessions, WorkSession};
use cotrace_core::model::{EventKind, Timeline, TimelineEvent, UserRef};
use cotrace_core::AttributionConfig;
use proptest::prelude::*;

const GAP_MS: i64 = 30 * 60 * 1000;

fn timeline(name: &str, events: &[(i64, EventKind)]) -> Timeline {
    let user = UserRef::from_raw(name);
    Timeline {
        schema_version: 1,
        user: user.clone(),
        attribution_config: AttributionConfig::default(),
        events: events
            .iter()
            .enumerate()
            .map(|(i, &(ts, kind))| TimelineEvent {
                event_id: format!("e{i:04}"),
                user: user.clone(),
                timestamp_ms: ts,
                kind,
                payload_ref: format!("p{i}"),
                extra: Default::default(),
            })
            .collect(),
        attributions: Vec::new(),
        sessions: Vec::new(),
        commits: Vec::new(),
        extra: Default::default(),
    }
}

fn minutes(ts: &[i64]) -> Timeline {
    let events: Vec<_> = ts
        .iter()
        .map(|m| (m * 60_000, EventKind::HumanEdit))
        .collect();
    timeline("u", &events)
}

fn work_session(user: &str, index: u32, share: f64) -> WorkSession {
    WorkSession {
        user: UserRef::from_raw(user),
        index,
        start_ms: 0,
        end_ms: 0,
        n_human: 0,
        n_copilot: 0,
        n_external: 0,
        n_prompts: 0,
        n_events: 0,
        ai_edit_share: Some(share),
    }
}

#[test]
fn gap_longer_than_threshold_splits() {
    let s = segment_sessions(&minutes(&[0, 10, 55]), GAP_MS);
    assert_eq!(s.len(), 2);
    assert_eq!((s[0].n_events, s[1].n_events), (2, 1));
    assert_eq!((s[0].index, s[1].index), (1, 2));
}

#[test]
fn gaps_within_threshold_chain() {
    let s = segment_sessions(&minutes(&[0, 29, 58]), GAP_MS);
    assert_eq!(s.len(), 1);
    assert_eq!((s[0].start_ms, s[0].end_ms), (0, 58 * 60_000));
}

#[test]
fn gap_of_exactly_threshold_stays_together() {
    assert_eq!(segment_sessions(&minutes(&[0, 30]), GAP_MS).len(), 1);
}

#[test]
fn single_event_session() {
    let t = timeline("u", &[(7, EventKind::ChatPrompt)]);
    let s = segment_sessions(&t, GAP_MS);
    assert_eq!(s.len(), 1);
    assert_eq!((s[0].start_ms, s[0].end_ms, s[0].n_prompts), (7, 7, 1));
    assert_eq!(s[0].ai_edit_share, None);
}

#[test]
fn session_share_counts_edit_kinds() {
    let t = timeline(
        "u",
        &[
            (0, EventKind::ChatPrompt),
            (1, EventKind::CopilotEdit),
            (2, EventKind::HumanEdit),
            (3, EventKind::ExternalEdit),
            (4, EventKind::CopilotEdit),
            (5, EventKind::AgentAction),
        ],
    );
    let s = segment_sessions(&t, GAP_MS);
    assert_eq!(s[0].ai_edit_share, Some(0.5));
    assert_eq!(s[0].n_events, 6);
}

#[test]
fn linear_decline_is_perfectly_negative() {
    let sessions = [
        work_session("a", 1, 1.0),
        work_session("a", 2, 0.5),
        work_session("a", 3, 0.0),
    ];
    let t = ai_share_trend(&sessions).unwrap();
    assert!((t.pearson_r + 1.0).abs() < 1e-12);
    assert!((t.weighted_slope + 0.5).abs() < 1e-12);
}

#[test]
fn constant_share_has_zero_variance() {
    let sessions = [
        work_session("a", 1, 0.3),
        work_session("a", 2, 0.3),
        work_session("a", 3, 0.3),
    ];
    let t = ai_share_trend(&sessions).unwrap();
    assert_eq!(t.pearson_r, 0.0);
    assert!(t.zero_variance);
}

#[test]
fn four_point_oracle() {
    // Two users with two sessions each.
    let sessions = [
        work_session("a", 1, 0.8),
        work_session("a", 2, 0.4),
        work_session("b", 1, 0.6),
        work_session("b", 2, 0.2),
    ];
    let t = ai_share_trend(&sessions).unwrap();
    // r = -0.4 / sqrt(1 * 0.2)
    assert!((t.pearson_r - (-0.4 / 0.2f64.sqrt())).abs() < 1e-12);
    assert!((t.pearson_r + 0.894_427_191).abs() < 1e-9);
    // With 2 degrees of freedom the two-sided p-value is 1 - |r|.
    assert!(
        (t.p_value - (1.0 + t.pearson_r)).abs() < 1e-9,
        "{}",
        t.p_value
    );
    assert_eq!(t.per_index.len(), 2);
    assert!((t.per_index[0].mean_share - 0.7).abs() < 1e-12);
    assert!((t.weighted_slope + 0.4).abs() < 1e-12);
}

#[test]
fn fewer_than_two_points_is_an_error() {
    assert!(ai_share_trend(&[work_session("a", 1, 0.5)]).is_err());
    let mut empty = work_session("a", 2, 0.0);
    empty.ai_edit_share = None;
    assert!(ai_share_trend(&[work_session("a", 1, 0.5), empty]).is_err());
}

#[test]
fn two_bin_density() {
    let t = timeline(
        "u",
        &[
            (0, EventKind::HumanEdit),
            (50, EventKind::HumanEdit),
            (100, EventKind::HumanEdit),
        ],
    );
    let o = overview(&[t], 2);
    assert_eq!(o.density[&EventKind::HumanEdit], [2, 1]);
    assert_eq!(o.density[&EventKind::CopilotEdit], [0, 0]);
}

#[test]
fn users_sorted_by_share_with_edit_free_users_last() {
    let high = timeline(
        "high",
        &[(0, EventKind::CopilotEdit), (1, EventKind::CopilotEdit)],
    );
    let low = timeline(
        "low",
        &[(0, EventKind::CopilotEdit), (1, EventKind::HumanEdit)],
    );
    let none = timeline("none", &[(0, EventKind::ChatPrompt)]);
    let o = overview(&[none.clone(), low.clone(), high.clone()], 10);
    let order: Vec<_> = o.per_user.iter().map(|u| u.user.clone()).collect();
    assert_eq!(order, [high.user, low.user, none.user]);
    assert_eq!(o.per_user[2].ai_edit_share_overall, None);
}

fn kind_strategy() -> impl Strategy<Value = EventKind> {
    prop::sample::select(EventKind::ALL.to_vec())
}

fn events_strategy() -> impl Strategy<Value = Vec<(i64, EventKind)>> {
    prop::collection::vec((0i64..4 * 3_600_000, kind_strategy()), 0..40).prop_map(|mut v| {
        v.sort_by_key(|e| e.0);
        v
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn segmentation_matches_pairwise_oracle(events in events_strategy(), gap_min in 1i64..90) {
        let gap = gap_min * 60_000;
        let t = timeline("u", &events);
        let sessions = segment_sessions(&t, gap);
        // Oracle: consecutive events share a session iff their gap is within the threshold.
        let mut expected = Vec::new();
        for (i, e) in events.iter().enumerate() {
            if i == 0 || e.0 - events[i - 1].0 > gap {
                expected.push(0u32);
            }
            *expected.last_mut().unwrap() += 1;
        }
        let got: Vec<u32> = sessions.iter().map(|s| s.n_events).collect();
        prop_assert_eq!(got, expected);
        for w in sessions.windows(2) {
            prop_assert!(w[1].start_ms - w[0].end_ms > gap);
        }
        for (i, s) in sessions.iter().enumerate() {
            prop_assert_eq!(s.index as usize, i + 1);
            let edits = s.n_human + s.n_copilot + s.n_external;
            prop_assert_eq!(s.ai_edit_share.is_some(), edits > 0);
        }
    }

    #[test]
    fn density_conserves_and_adds(a in events_strategy(), b in events_strategy(), bins in 1usize..60) {
        let ta = timeline("a", &a);
        let tb = timeline("b", &b);
        let both = overview(&[ta.clone(), tb.clone()], bins);
        let total: u64 = both.density.values().flatten().sum();
        prop_assert_eq!(total, (a.len() + b.len()) as u64);
        let oa = overview(std::slice::from_ref(&ta), bins);
        let ob = overview(&[tb], bins);
        for kind in EventKind::ALL {
            let sum: Vec<u64> = oa.density[&kind].iter().zip(&ob.density[&kind]).map(|(x, y)| x + y).collect();
            prop_assert_eq!(&both.density[&kind], &sum);
        }
        let twice = overview(&[ta.clone(), ta], bins);
        for kind in EventKind::ALL {
            let doubled: Vec<u64> = oa.density[&kind].iter().map(|x| 2 * x).collect();
            prop_assert_eq!(&twice.density[&kind], &doubled);
        }
    }

    #[test]
    fn pearson_invariant_to_affine_maps(
        points in prop::collection::vec((0u32..20, 0.0f64..1.0), 3..30),
        scale in 0.1f64..10.0,
        shift in -5.0f64..5.0,
    ) {
        let xs: Vec<f64> = points.iter().map(|p| p.0 as f64).collect();
        let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
        let (r, _, degenerate) = pearson(&xs, &ys);
        prop_assume!(!degenerate);
        let scaled: Vec<f64> = xs.iter().map(|x| x * scale + shift).collect();
        let negated: Vec<f64> = ys.iter().map(|y| -y).collect();
        prop_assert!((pearson(&scaled, &ys).0 - r).abs() < 1e-12);
        prop_assert!((pearson(&xs, &negated).0 + r).abs() < 1e-12);
        prop_assert!((-1.0..=1.0).contains(&r));
    }
}
