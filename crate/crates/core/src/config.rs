//! Pipeline configuration file (TOML). Every section is optional and falls
//! back to its defaults; unknown keys are rejected.
//!
//! ```toml
//! [similarity]
//! threshold = 0.34
//!
//! [generation]
//! mode = "synonym"
//! seed = 42
//!
//! [split]
//! ratios = [0.8, 0.1, 0.1]
//!
//! [scorer]
//! endpoint = "http://localhost:8080/score"
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::eval::{HypothesisTemplate, RemoteConfig, DEFAULT_TEMPLATE};
use crate::generate::GenerationConfig;
use crate::lexicon::IngestOptions;
use crate::similarity::SimilarityConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config: {0}")]
    Parse(String),
    #[error("config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestSection {
    pub keep_multiword_headwords: bool,
}

impl Default for IngestSection {
    fn default() -> Self {
        Self {
            keep_multiword_headwords: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    pub ratios: [f64; 3],
    pub seed: u64,
    pub group_by_headword: bool,
}

impl Default for SplitSection {
    fn default() -> Self {
        Self {
            ratios: [0.8, 0.1, 0.1],
            seed: 0,
            group_by_headword: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationSection {
    pub template: String,
}

impl Default for EvaluationSection {
    fn default() -> Self {
        Self {
            template: DEFAULT_TEMPLATE.to_owned(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub similarity: SimilarityConfig,
    pub ingest: IngestSection,
    pub generation: GenerationConfig,
    pub split: SplitSection,
    pub scorer: RemoteConfig,
    pub evaluation: EvaluationSection,
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.generation_config()
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let sum: f64 = self.split.ratios.iter().sum();
        if self.split.ratios.iter().any(|r| !(r.is_finite() && *r > 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(ConfigError::Invalid(format!(
                "split.ratios must be positive and sum to 1, got {:?}",
                self.split.ratios
            )));
        }
        HypothesisTemplate::new(self.evaluation.template.clone()).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.scorer.max_in_flight == 0 {
            return Err(ConfigError::Invalid("scorer.max_in_flight must be at least 1".into()));
        }
        Ok(())
    }

    /// Generation settings with the shared similarity section folded in.
    pub fn generation_config(&self) -> GenerationConfig {
        GenerationConfig {
            similarity: self.similarity.clone(),
            ..self.generation.clone()
        }
    }

    pub fn ingest_options(&self) -> IngestOptions {
        IngestOptions {
            keep_multiword_headwords: self.ingest.keep_multiword_headwords,
        }
    }

    pub fn template(&self) -> HypothesisTemplate {
        HypothesisTemplate::new(self.evaluation.template.clone()).expect("validated at load")
    }

    /// SHA-256 over the canonical JSON form of the effective configuration.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}
