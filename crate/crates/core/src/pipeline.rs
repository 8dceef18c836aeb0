//! End-to-end run: load both streams, attribute, build timelines, and
//! aggregate the report. Users are processed independently.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::analytics::{
    ai_share_trend, behavior_distribution, build_timeline, overview, segment_sessions,
    ClassifierBackend, RuleBackend, WorkSession,
};
use crate::attribution::attribute_commits;
use crate::chat::{ingest_chats_with, IngestReport};
use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::model::{
    validate_timeline, ChatSession, MatchClass, Origin, ShadowCommit, Timeline, UserRef,
};
use crate::par::{self, Exec};
use crate::report::{PromptLabel, Report, UserSummary, REPORT_SCHEMA};
use crate::shadow::{read_shadow_history, RepoSource};

/// Both capture streams of one user.
#[derive(Debug, Clone, PartialEq)]
pub struct UserInput {
    pub user: UserRef,
    pub commits: Vec<ShadowCommit>,
    pub sessions: Vec<ChatSession>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedCorpus {
    /// Sorted by user hash.
    pub inputs: Vec<UserInput>,
    pub chat_report: IngestReport,
    pub warnings: Vec<String>,
}

/// Shadow sources found on disk, one per user, with skip warnings.
pub type ShadowSources = (Vec<(UserRef, RepoSource)>, Vec<String>);

/// Per-user shadow sources under `dir`: `<hash>/` repositories and
/// `<hash>.bundle` files. Other entries are reported and skipped.
pub fn discover_shadow(dir: &Path) -> Result<ShadowSources> {
    let mut found = Vec::new();
    let mut warnings = Vec::new();
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        let name = entry.file_name().to_string_lossy().into_owned();
        let stem = name.strip_suffix(".bundle").unwrap_or(&name);
        match UserRef::parse(stem) {
            Some(user) if path.is_dir() && stem == name => {
                found.push((user, RepoSource::Directory(path)))
            }
            Some(user) if path.is_file() && stem != name => {
                found.push((user, RepoSource::Bundle(path)))
            }
            _ => warnings.push(format!(
                "shadow/{name}: not a <user_hash> repository or bundle; skipped"
            )),
        }
    }
    found.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.path().cmp(b.1.path())));
    let mut deduped: Vec<(UserRef, RepoSource)> = Vec::with_capacity(found.len());
    for (user, source) in found {
        if deduped.last().is_some_and(|(u, _)| *u == user) {
            warnings.push(format!(
                "{}: second shadow source for user; skipped",
                source.path().display()
            ));
            continue;
        }
        deduped.push((user, source));
    }
    warnings.sort();
    Ok((deduped, warnings))
}

/// Read a corpus laid out as `chats/*.json` plus `shadow/<user_hash>`. A
/// missing directory counts as an empty stream; both empty is an error.
pub fn load_corpus(
    chats_dir: &Path,
    shadow_dir: &Path,
    config: &PipelineConfig,
    exec: Exec,
) -> Result<LoadedCorpus> {
    let mut warnings = Vec::new();
    let (sessions, chat_report) = if chats_dir.exists() {
        ingest_chats_with(chats_dir, &config.ingest, exec)?
    } else {
        warnings.push(format!("{}: no chat directory", chats_dir.display()));
        (Vec::new(), IngestReport::default())
    };
    let sources = if shadow_dir.exists() {
        let (sources, found) = discover_shadow(shadow_dir)?;
        warnings.extend(found);
        sources
    } else {
        warnings.push(format!("{}: no shadow directory", shadow_dir.display()));
        Vec::new()
    };

    let histories = par::map(exec, &sources, |(user, source)| {
        read_shadow_history(source, user)
    });
    let mut by_user: BTreeMap<UserRef, UserInput> = BTreeMap::new();
    for ((user, source), history) in sources.iter().zip(histories) {
        let commits = match history {
            Ok(h) => {
                warnings.extend(
                    h.warnings
                        .into_iter()
                        .map(|w| format!("{}: {w}", source.path().display())),
                );
                h.commits
            }
            Err(Error::EmptyRepository { path }) => {
                warnings.push(format!("{}: repository has no commits", path.display()));
                Vec::new()
            }
            Err(e) => return Err(e),
        };
        by_user.insert(
            user.clone(),
            UserInput {
                user: user.clone(),
                commits,
                sessions: Vec::new(),
            },
        );
    }
    for session in sessions {
        by_user
            .entry(session.user.clone())
            .or_insert_with(|| UserInput {
                user: session.user.clone(),
                commits: Vec::new(),
                sessions: Vec::new(),
            })
            .sessions
            .push(session);
    }
    if by_user.is_empty() {
        return Err(Error::Consistency(format!(
            "no chat sessions in {} and no shadow histories in {}",
            chats_dir.display(),
            shadow_dir.display()
        )));
    }
    Ok(LoadedCorpus {
        inputs: by_user.into_values().collect(),
        chat_report,
        warnings,
    })
}

/// Attribution, timeline and work sessions for one user.
#[derive(Debug, Clone, PartialEq)]
pub struct UserAnalysis {
    pub timeline: Timeline,
    pub work_sessions: Vec<WorkSession>,
}

pub fn analyze_user(input: &UserInput, config: &PipelineConfig) -> Result<UserAnalysis> {
    let attributions = attribute_commits(&input.commits, &input.sessions, &config.attribution);
    let timeline = build_timeline(
        &input.user,
        &input.commits,
        &attributions,
        &input.sessions,
        &config.attribution,
    )?;
    let violations = validate_timeline(&timeline);
    if let Some(first) = violations.first() {
        return Err(Error::Consistency(format!(
            "timeline for {} fails validation ({} violations), first: {first}",
            input.user,
            violations.len()
        )));
    }
    let work_sessions = segment_sessions(&timeline, config.analytics.gap_ms());
    Ok(UserAnalysis {
        timeline,
        work_sessions,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub timelines: Vec<Timeline>,
    pub report: Report,
}

/// Analyze every user and assemble the report. Classification errors from
/// `backend` fall back to the rule classifier and are counted.
pub fn run_pipeline(
    inputs: &[UserInput],
    config: &PipelineConfig,
    backend: &dyn ClassifierBackend,
    exec: Exec,
    mut warnings: Vec<String>,
) -> Result<PipelineOutput> {
    config.check()?;
    let analyses = par::map(exec, inputs, |input| analyze_user(input, config))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let prompts: Vec<(UserRef, String, String)> = analyses
        .iter()
        .flat_map(|a| {
            a.timeline
                .sessions
                .iter()
                .flat_map(|s| &s.requests)
                .filter(|r| !r.is_trivial)
                .map(|r| {
                    (
                        a.timeline.user.clone(),
                        r.request_id.clone(),
                        r.prompt_text.clone(),
                    )
                })
        })
        .collect();
    let rules = RuleBackend::new();
    let labeled = par::map(exec, &prompts, |(user, request_id, text)| {
        let (label, fallback) = match backend.classify(text) {
            Ok(label) => (label, None),
            Err(e) => (
                rules.label(text),
                Some(format!("{request_id}: {e}; used rule classifier")),
            ),
        };
        (
            PromptLabel {
                user: user.clone(),
                request_id: request_id.clone(),
                label,
            },
            fallback,
        )
    });
    let mut prompt_labels = Vec::with_capacity(labeled.len());
    let mut classifier_fallbacks = 0;
    for (label, fallback) in labeled {
        if let Some(msg) = fallback {
            log::warn!("{msg}");
            warnings.push(msg);
            classifier_fallbacks += 1;
        }
        prompt_labels.push(label);
    }
    let labels: Vec<_> = prompt_labels.iter().map(|p| p.label.clone()).collect();
    let behavior = behavior_distribution(&labels).ok();

    let work_sessions: Vec<WorkSession> = analyses
        .iter()
        .flat_map(|a| a.work_sessions.clone())
        .collect();
    let (trend, trend_note) = match ai_share_trend(&work_sessions) {
        Ok(t) => (Some(t), None),
        Err(e) => (None, Some(e.to_string())),
    };

    let users = analyses.iter().map(summarize).collect();
    let timelines: Vec<Timeline> = analyses.into_iter().map(|a| a.timeline).collect();
    let overview = overview(&timelines, config.analytics.bins);

    Ok(PipelineOutput {
        report: Report {
            schema: REPORT_SCHEMA.to_string(),
            config: config.clone(),
            users,
            work_sessions,
            classifier: backend.name().to_string(),
            classifier_fallbacks,
            prompt_labels,
            behavior,
            trend,
            trend_note,
            overview,
            warnings,
        },
        timelines,
    })
}

fn summarize(a: &UserAnalysis) -> UserSummary {
    let t = &a.timeline;
    let count = |o: Origin| t.attributions.iter().filter(|x| x.origin == o).count();
    let class = |c: MatchClass| t.attributions.iter().filter(|x| x.match_class == c).count();
    let requests = t.sessions.iter().flat_map(|s| &s.requests);
    UserSummary {
        user: t.user.clone(),
        n_commits: t.commits.len(),
        n_requests: requests.clone().count(),
        n_trivial_prompts: requests.filter(|r| r.is_trivial).count(),
        n_human: count(Origin::Human),
        n_copilot: count(Origin::Copilot),
        n_external: count(Origin::ExternalSuspected),
        n_full: class(MatchClass::Full),
        n_partial: class(MatchClass::Partial),
        n_work_sessions: a.work_sessions.len(),
    }
}

/// Load a corpus from disk and run the whole pipeline over it.
pub fn run_corpus(
    chats_dir: &Path,
    shadow_dir: &Path,
    config: &PipelineConfig,
    backend: &dyn ClassifierBackend,
    exec: Exec,
) -> Result<PipelineOutput> {
    config.check()?;
    let corpus = load_corpus(chats_dir, shadow_dir, config, exec)?;
    let mut warnings = corpus.chat_report.warnings.clone();
    warnings.extend(corpus.warnings);
    run_pipeline(&corpus.inputs, config, backend, exec, warnings)
}
