//! Pipeline configuration, loadable from TOML.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analytics::DEFAULT_BINS;
use crate::attribution::AttributionConfig;
use crate::chat::IngestConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    #[default]
    Rules,
    Llm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalyticsConfig {
    /// Inactivity gap between work sessions, in minutes.
    pub gap_min: f64,
    pub bins: usize,
    pub classifier: ClassifierKind,
}

impl Default for AnalyticsConfig {
    fn default() -> Self {
        AnalyticsConfig {
            gap_min: 30.0,
            bins: DEFAULT_BINS,
            classifier: ClassifierKind::Rules,
        }
    }
}

impl AnalyticsConfig {
    pub fn gap_ms(&self) -> i64 {
        (self.gap_min * 60_000.0).round() as i64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct LlmConfig {
    pub endpoint: Option<String>,
    /// Name of the environment variable holding the API key.
    pub api_key_env: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct PipelineConfig {
    pub attribution: AttributionConfig,
    pub ingest: IngestConfig,
    pub analytics: AnalyticsConfig,
    pub llm: LlmConfig,
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn check(&self) -> Result<()> {
        self.attribution.check()?;
        if self.analytics.gap_min.is_nan() || self.analytics.gap_min <= 0.0 {
            return Err(Error::Config(format!(
                "gap_min {} must be positive",
                self.analytics.gap_min
            )));
        }
        if self.analytics.bins == 0 {
            return Err(Error::Config("bins must be at least 1".into()));
        }
        if self.analytics.classifier == ClassifierKind::Llm && self.llm.endpoint.is_none() {
            return Err(Error::Config(
                "classifier \"llm\" needs [llm] endpoint".into(),
            ));
        }
        Ok(())
    }
}
