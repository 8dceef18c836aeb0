//! Corpus-level analytics report.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::analytics::{
    BehaviorDistribution, BehaviorLabel, OverviewAggregate, TrendResult, WorkSession,
};
use crate::config::PipelineConfig;
use crate::model::UserRef;

pub const REPORT_SCHEMA: &str = "cotrace-report-v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserSummary {
    pub user: UserRef,
    pub n_commits: usize,
    pub n_requests: usize,
    pub n_trivial_prompts: usize,
    pub n_human: usize,
    pub n_copilot: usize,
    pub n_external: usize,
    pub n_full: usize,
    pub n_partial: usize,
    pub n_work_sessions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptLabel {
    pub user: UserRef,
    pub request_id: String,
    #[serde(flatten)]
    pub label: BehaviorLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub config: PipelineConfig,
    pub users: Vec<UserSummary>,
    pub work_sessions: Vec<WorkSession>,
    pub classifier: String,
    /// Prompts the configured backend failed on and the rule backend labeled.
    pub classifier_fallbacks: usize,
    pub prompt_labels: Vec<PromptLabel>,
    pub behavior: Option<BehaviorDistribution>,
    pub trend: Option<TrendResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trend_note: Option<String>,
    pub overview: OverviewAggregate,
    pub warnings: Vec<String>,
}

impl Report {
    /// Short plain-text summary for terminals.
    pub fn render_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "users: {}", self.users.len());
        for u in &self.users {
            let _ = writeln!(
                s,
                "  {}  commits={} requests={} human={} copilot={} (full={} partial={}) external={} sessions={}",
                &u.user.as_str()[..12],
                u.n_commits,
                u.n_requests,
                u.n_human,
                u.n_copilot,
                u.n_full,
                u.n_partial,
                u.n_external,
                u.n_work_sessions
            );
        }
        match &self.trend {
            Some(t) => {
                let _ = writeln!(
                    s,
                    "AI edit share trend: r={:.3} p={:.4} slope={:.4} over {} sessions",
                    t.pearson_r, t.p_value, t.weighted_slope, t.n_points
                );
            }
            None => {
                let _ = writeln!(
                    s,
                    "AI edit share trend: {}",
                    self.trend_note.as_deref().unwrap_or("undefined")
                );
            }
        }
        if let Some(b) = &self.behavior {
            let _ = writeln!(
                s,
                "prompt behaviors ({} labeled, {} other):",
                b.total, b.other_count
            );
            for (category, share) in &b.fractions {
                let name = category.to_string();
                let _ = writeln!(s, "  {name:<10} {:5.1}%", share * 100.0);
            }
        }
        if !self.warnings.is_empty() {
            let _ = writeln!(s, "warnings: {}", self.warnings.len());
        }
        s
    }
}
