//! Reconstructs who wrote each change in an IDE workspace by pairing
//! AI chat logs with a shadow git history of file saves, then derives
//! per-user timelines and corpus-level reliance analytics.

pub mod analytics;
pub mod attribution;
pub mod chat;
pub mod config;
pub mod diff;
pub mod error;
pub mod model;
pub mod par;
pub mod pipeline;
pub mod report;
pub mod score;
pub mod shadow;
pub mod synth;

pub use attribution::{attribute_commits, AttributionConfig};
pub use config::PipelineConfig;
pub use error::{Error, Result};
pub use par::Exec;
pub use pipeline::{run_corpus, run_pipeline, PipelineOutput, UserInput};
