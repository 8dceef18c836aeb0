//! Timeline construction, work sessions, reliance trends, behavior labels,
//! and the multi-user overview.

pub mod behavior;
pub mod overview;
pub mod sessions;
pub mod timeline;
pub mod trend;

pub use behavior::{
    behavior_distribution, classify_behavior, BehaviorDistribution, BehaviorLabel, Category,
    ClassifierBackend, LlmBackend, LlmRequest, LlmResponse, LlmTransport, RuleBackend, CODEBOOK,
};
pub use overview::{overview, OverviewAggregate, UserOverview, DEFAULT_BINS};
pub use sessions::{segment_sessions, WorkSession, DEFAULT_GAP_MS};
pub use timeline::build_timeline;
pub use trend::{ai_share_trend, TrendResult};
