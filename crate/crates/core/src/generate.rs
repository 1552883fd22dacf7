//! Positive/negative sample construction.
//!
//! Positives pair every example sentence of a noun sense with each of the
//! sense's synonyms (or translations), minus the headword and anything
//! orthographically close to it. Negatives reuse the positive's sentence with
//! a label drawn from the noun vocabulary, rejecting any draw that resembles a
//! token of the sentence.

use std::collections::{HashMap, HashSet};
use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexicon::{DictionaryEntry, NounVocabulary, Pos, Sense};
use crate::similarity::{is_similar, similar_to_any_token, SimilarityConfig, SimilarityError};

#[derive(Debug, Error, PartialEq)]
pub enum GenerationError {
    #[error("negative sampling gave up after {attempts} consecutive rejections for sentence {text:?}")]
    ResamplesExhausted { text: String, attempts: usize },
    #[error("noun vocabulary is empty")]
    EmptyVocabulary,
    #[error("invalid generation config: {0}")]
    Config(String),
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
}

/// Binary topic relevance; serialized as the integers 0 and 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Relevance {
    Irrelevant,
    Relevant,
}

impl From<Relevance> for u8 {
    fn from(r: Relevance) -> u8 {
        match r {
            Relevance::Irrelevant => 0,
            Relevance::Relevant => 1,
        }
    }
}

impl TryFrom<u8> for Relevance {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        match v {
            0 => Ok(Relevance::Irrelevant),
            1 => Ok(Relevance::Relevant),
            other => Err(format!("class must be 0 or 1, got {other}")),
        }
    }
}

impl fmt::Display for Relevance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", u8::from(*self))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleSource {
    Synonym,
    Translation,
    Negative,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Provenance {
    pub headword: String,
    pub sense_id: String,
    pub source: SampleSource,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabeledSample {
    pub text: String,
    pub label: String,
    pub class: Relevance,
    pub provenance: Provenance,
}

impl LabeledSample {
    /// Checks the per-sample invariants: non-empty text/label and a source
    /// consistent with the class.
    pub fn check(&self) -> Result<(), String> {
        if self.text.trim().is_empty() {
            return Err("empty text".into());
        }
        if self.label.trim().is_empty() {
            return Err("empty label".into());
        }
        let consistent = match self.class {
            Relevance::Relevant => self.provenance.source != SampleSource::Negative,
            Relevance::Irrelevant => self.provenance.source == SampleSource::Negative,
        };
        if !consistent {
            return Err(format!(
                "class {} is inconsistent with source {:?}",
                self.class, self.provenance.source
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum GenerationMode {
    /// Labels come from sense synonyms.
    #[default]
    Synonym,
    /// Labels come from sense translations.
    Translation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationConfig {
    pub mode: GenerationMode,
    pub translation_languages: Vec<String>,
    #[serde(skip)]
    pub similarity: SimilarityConfig,
    pub negatives_per_positive: usize,
    pub max_negative_resamples: usize,
    pub seed: u64,
    pub allow_multiword_labels: bool,
    pub dedup_positives: bool,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            mode: GenerationMode::Synonym,
            translation_languages: vec!["de".into(), "fr".into(), "en".into()],
            similarity: SimilarityConfig::default(),
            negatives_per_positive: 1,
            max_negative_resamples: 100,
            seed: 0,
            allow_multiword_labels: true,
            dedup_positives: true,
        }
    }
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<(), GenerationError> {
        self.similarity.validate()?;
        if self.negatives_per_positive == 0 {
            return Err(GenerationError::Config(
                "negatives_per_positive must be at least 1".into(),
            ));
        }
        if self.max_negative_resamples == 0 {
            return Err(GenerationError::Config(
                "max_negative_resamples must be at least 1".into(),
            ));
        }
        if self.mode == GenerationMode::Translation && self.translation_languages.is_empty() {
            return Err(GenerationError::Config(
                "translation mode needs at least one language".into(),
            ));
        }
        Ok(())
    }
}

fn candidate_labels<'a>(sense: &'a Sense, cfg: &'a GenerationConfig) -> Vec<(&'a str, SampleSource)> {
    match cfg.mode {
        GenerationMode::Synonym => sense
            .synonyms
            .iter()
            .map(|s| (s.as_str(), SampleSource::Synonym))
            .collect(),
        GenerationMode::Translation => cfg
            .translation_languages
            .iter()
            .filter_map(|lang| sense.translations.get(lang))
            .flatten()
            .map(|s| (s.as_str(), SampleSource::Translation))
            .collect(),
    }
}

/// Class-1 samples for one noun entry, in sense, sentence, label order.
pub fn generate_positives(entry: &DictionaryEntry, cfg: &GenerationConfig) -> Vec<LabeledSample> {
    if entry.pos != Pos::Noun {
        return Vec::new();
    }
    let mut out = Vec::new();
    for sense in &entry.senses {
        let labels: Vec<_> = candidate_labels(sense, cfg)
            .into_iter()
            .filter(|(label, _)| cfg.allow_multiword_labels || !label.contains(char::is_whitespace))
            // is_similar also covers folded equality with the headword
            .filter(|(label, _)| !is_similar(label, &entry.headword, &cfg.similarity))
            .collect();
        for text in &sense.examples {
            for (label, source) in &labels {
                out.push(LabeledSample {
                    text: text.clone(),
                    label: (*label).to_owned(),
                    class: Relevance::Relevant,
                    provenance: Provenance {
                        headword: entry.headword.clone(),
                        sense_id: sense.sense_id.clone(),
                        source: *source,
                    },
                });
            }
        }
    }
    out
}

/// RNG for the negatives of positive `index`: one ChaCha stream per positive,
/// so results do not depend on scheduling.
fn negative_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Draws `cfg.negatives_per_positive` class-0 samples per positive.
///
/// A draw is rejected when it resembles any token of the sentence, equals the
/// positive's label or headword after folding, equals any other positive label
/// of the same sentence, or repeats a label already drawn for this positive.
pub fn generate_negatives(
    positives: &[LabeledSample],
    vocab: &NounVocabulary,
    cfg: &GenerationConfig,
) -> Result<Vec<LabeledSample>, GenerationError> {
    if positives.is_empty() {
        return Ok(Vec::new());
    }
    if vocab.is_empty() {
        return Err(GenerationError::EmptyVocabulary);
    }
    let sim = &cfg.similarity;
    let mut labels_by_text: HashMap<&str, HashSet<String>> = HashMap::new();
    for p in positives {
        let set = labels_by_text.entry(p.text.as_str()).or_default();
        set.insert(sim.fold(&p.label));
        set.insert(sim.fold(&p.provenance.headword));
    }

    let per_positive = positives
        .par_iter()
        .enumerate()
        .map(|(index, pos)| {
            let mut rng = negative_rng(cfg.seed, index);
            let forbidden = &labels_by_text[pos.text.as_str()];
            let mut chosen: Vec<LabeledSample> = Vec::with_capacity(cfg.negatives_per_positive);
            let mut chosen_folded: HashSet<String> = HashSet::new();
            for _ in 0..cfg.negatives_per_positive {
                let mut rejections = 0;
                let label = loop {
                    let candidate = &vocab.words()[rng.gen_range(0..vocab.len())];
                    let folded = sim.fold(candidate);
                    let rejected = forbidden.contains(&folded)
                        || chosen_folded.contains(&folded)
                        || similar_to_any_token(candidate, &pos.text, sim);
                    if !rejected {
                        chosen_folded.insert(folded);
                        break candidate.clone();
                    }
                    rejections += 1;
                    if rejections >= cfg.max_negative_resamples {
                        return Err(GenerationError::ResamplesExhausted {
                            text: pos.text.clone(),
                            attempts: rejections,
                        });
                    }
                };
                chosen.push(LabeledSample {
                    text: pos.text.clone(),
                    label,
                    class: Relevance::Irrelevant,
                    provenance: Provenance {
                        headword: pos.provenance.headword.clone(),
                        sense_id: pos.provenance.sense_id.clone(),
                        source: SampleSource::Negative,
                    },
                });
            }
            Ok(chosen)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(per_positive.into_iter().flatten().collect())
}

/// Result of a full build: samples plus bookkeeping for the metadata sidecar.
#[derive(Debug, Clone, PartialEq)]
pub struct BuildOutput {
    pub samples: Vec<LabeledSample>,
    pub positives: usize,
    pub duplicates_removed: usize,
}

/// Positives for every noun entry followed, per positive, by its negatives.
/// Identical `(text, label)` positives are kept once when `dedup_positives` is set.
pub fn build_dataset(
    entries: &[DictionaryEntry],
    vocab: &NounVocabulary,
    cfg: &GenerationConfig,
) -> Result<BuildOutput, GenerationError> {
    cfg.validate()?;
    let raw: Vec<LabeledSample> = entries
        .par_iter()
        .map(|e| generate_positives(e, cfg))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();

    let before = raw.len();
    let positives: Vec<LabeledSample> = if cfg.dedup_positives {
        let mut seen = HashSet::new();
        raw.into_iter()
            .filter(|s| seen.insert((s.text.clone(), s.label.clone())))
            .collect()
    } else {
        raw
    };
    let duplicates_removed = before - positives.len();
    if duplicates_removed > 0 {
        log::info!("dropped {duplicates_removed} duplicate (text, label) positives");
    }

    let negatives = generate_negatives(&positives, vocab, cfg)?;
    let k = cfg.negatives_per_positive;
    let mut samples = Vec::with_capacity(positives.len() * (k + 1));
    for (p, negs) in positives.iter().zip(negatives.chunks(k)) {
        samples.push(p.clone());
        samples.extend_from_slice(negs);
    }
    Ok(BuildOutput {
        samples,
        positives: positives.len(),
        duplicates_removed,
    })
}
