//! Building blocks for compiling a bilingual dictionary into binary
//! topic-relevance datasets and for evaluating entailment-style zero-shot
//! classifiers on labeled topic data.
//!
//! Pipeline: [`lexicon`] parses the dictionary, [`generate`] turns noun senses
//! into positive and negative samples using the [`similarity`] filters,
//! [`dataset`] splits and serializes them, [`validate`] re-checks the
//! construction rules, and [`eval`] runs zero-shot evaluation.

pub mod config;
pub mod dataset;
pub mod eval;
pub mod generate;
pub mod lexicon;
pub mod similarity;
pub mod validate;

pub use config::PipelineConfig;
pub use dataset::{split_dataset, DatasetSplits, DatasetStats};
pub use generate::{build_dataset, GenerationConfig, LabeledSample, Relevance};
pub use lexicon::{DictionaryEntry, NounVocabulary, Sense};
pub use similarity::SimilarityConfig;
