use std::collections::{HashMap, HashSet};

use thiserror::Error;

use super::remote::RemoteError;
use super::EvalDataset;
use crate::generate::{LabeledSample, Relevance};
use crate::similarity::{normalized_distance, tokenize, SimilarityConfig};

#[derive(Debug, Error)]
pub enum ScorerError {
    #[error("expected {expected} probabilities, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("probability {value} at position {index} is outside [0, 1]")]
    OutOfRange { index: usize, value: f64 },
    #[error("unknown premise")]
    UnknownPremise,
    #[error(transparent)]
    Remote(#[from] RemoteError),
}

/// A candidate label together with its rendered hypothesis sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hypothesis {
    pub label: String,
    pub text: String,
}

/// Returns one entailment probability in `[0, 1]` per hypothesis, in order.
pub trait EntailmentScorer: Send + Sync {
    fn score(&self, premise: &str, hypotheses: &[Hypothesis]) -> Result<Vec<f64>, ScorerError>;

    fn name(&self) -> &str;
}

/// Knows the gold label of every premise; 1.0 for the gold label, else 0.0.
/// Only meaningful for tests and harness checks.
#[derive(Debug, Clone)]
pub struct OracleScorer {
    gold: HashMap<String, String>,
}

impl OracleScorer {
    pub fn from_dataset(dataset: &EvalDataset) -> Self {
        let gold = dataset
            .examples
            .iter()
            .zip(dataset.gold())
            .map(|(ex, &g)| (ex.text.clone(), dataset.label_map.classes[g].label.clone()))
            .collect();
        Self { gold }
    }
}

impl EntailmentScorer for OracleScorer {
    fn score(&self, premise: &str, hypotheses: &[Hypothesis]) -> Result<Vec<f64>, ScorerError> {
        let gold = self.gold.get(premise).ok_or(ScorerError::UnknownPremise)?;
        Ok(hypotheses
            .iter()
            .map(|h| if &h.label == gold { 1.0 } else { 0.0 })
            .collect())
    }

    fn name(&self) -> &str {
        "oracle"
    }
}

/// Oracle over labeled pairs: 1.0 iff `(premise, label)` is a class-1 sample.
#[derive(Debug, Clone, Default)]
pub struct PairOracleScorer {
    positives: HashSet<(String, String)>,
}

impl PairOracleScorer {
    pub fn from_samples(samples: &[LabeledSample]) -> Self {
        Self {
            positives: samples
                .iter()
                .filter(|s| s.class == Relevance::Relevant)
                .map(|s| (s.text.clone(), s.label.clone()))
                .collect(),
        }
    }
}

impl EntailmentScorer for PairOracleScorer {
    fn score(&self, premise: &str, hypotheses: &[Hypothesis]) -> Result<Vec<f64>, ScorerError> {
        Ok(hypotheses
            .iter()
            .map(|h| {
                if self.positives.contains(&(premise.to_owned(), h.label.clone())) {
                    1.0
                } else {
                    0.0
                }
            })
            .collect())
    }

    fn name(&self) -> &str {
        "pair-oracle"
    }
}

/// Model-free baseline: the best `1 - normalized_distance` between the label
/// and any premise token.
#[derive(Debug, Clone, Default)]
pub struct LexicalScorer {
    similarity: SimilarityConfig,
}

impl LexicalScorer {
    pub fn new(similarity: SimilarityConfig) -> Self {
        Self { similarity }
    }
}

impl EntailmentScorer for LexicalScorer {
    fn score(&self, premise: &str, hypotheses: &[Hypothesis]) -> Result<Vec<f64>, ScorerError> {
        let tokens = tokenize(premise);
        Ok(hypotheses
            .iter()
            .map(|h| {
                tokens
                    .iter()
                    .map(|t| 1.0 - normalized_distance(&h.label, t, &self.similarity))
                    .fold(0.0, f64::max)
            })
            .collect())
    }

    fn name(&self) -> &str {
        "lexical"
    }
}
