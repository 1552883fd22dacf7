//! Re-checks generation invariants on an already serialized dataset.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::Serialize;

use crate::generate::{GenerationConfig, LabeledSample, Relevance};
use crate::lexicon::DictionaryEntry;
use crate::similarity::{is_similar, tokenize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// Positive label equal or close to its headword.
    LabelNearHeadword,
    /// Negative label resembling a token of its sentence.
    NegativeInSentence,
    /// Negative label equal to the headword of its sentence.
    NegativeIsHeadword,
    /// Same `(text, label)` appears with both classes.
    ConflictingClasses,
    /// Class counts do not match `negatives_per_positive`.
    Imbalance,
    /// Provenance does not point at a known entry/sense.
    UnknownProvenance,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    /// 1-based record number, when the violation concerns one record.
    pub record: Option<usize>,
    pub kind: ViolationKind,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.record {
            Some(r) => write!(f, "record {r}: {:?}: {}", self.kind, self.message),
            None => write!(f, "{:?}: {}", self.kind, self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checked: usize,
    pub positives: usize,
    pub negatives: usize,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks every sample against the construction rules under `cfg`.
///
/// Balance is checked with a slack of `negatives_per_positive` so that a
/// single split file (where pairs may straddle splits) still passes.
pub fn validate_samples(
    samples: &[LabeledSample],
    cfg: &GenerationConfig,
    lexicon: Option<&[DictionaryEntry]>,
) -> ValidationReport {
    let sim = &cfg.similarity;
    let mut violations = Vec::new();
    let mut classes: HashMap<(&str, &str), HashSet<Relevance>> = HashMap::new();
    let known: Option<HashSet<(&str, &str)>> = lexicon.map(|entries| {
        entries
            .iter()
            .flat_map(|e| e.senses.iter().map(move |s| (e.headword.as_str(), s.sense_id.as_str())))
            .collect()
    });

    let (mut positives, mut negatives) = (0usize, 0usize);
    for (i, s) in samples.iter().enumerate() {
        let record = Some(i + 1);
        let headword = s.provenance.headword.as_str();
        match s.class {
            Relevance::Relevant => {
                positives += 1;
                if is_similar(&s.label, headword, sim) {
                    violations.push(Violation {
                        record,
                        kind: ViolationKind::LabelNearHeadword,
                        message: format!("label {:?} is within threshold of headword {headword:?}", s.label),
                    });
                }
            }
            Relevance::Irrelevant => {
                negatives += 1;
                if let Some(tok) = tokenize(&s.text).into_iter().find(|t| is_similar(&s.label, t, sim)) {
                    violations.push(Violation {
                        record,
                        kind: ViolationKind::NegativeInSentence,
                        message: format!("label {:?} is similar to sentence token {tok:?}", s.label),
                    });
                }
                if sim.fold(&s.label) == sim.fold(headword) {
                    violations.push(Violation {
                        record,
                        kind: ViolationKind::NegativeIsHeadword,
                        message: format!("label {:?} is the sentence's headword", s.label),
                    });
                }
            }
        }
        classes
            .entry((s.text.as_str(), s.label.as_str()))
            .or_default()
            .insert(s.class);
        if let Some(known) = &known {
            if !known.contains(&(headword, s.provenance.sense_id.as_str())) {
                violations.push(Violation {
                    record,
                    kind: ViolationKind::UnknownProvenance,
                    message: format!("no sense {:?} under headword {headword:?}", s.provenance.sense_id),
                });
            }
        }
    }

    let mut conflicts: Vec<_> = classes
        .into_iter()
        .filter(|(_, c)| c.len() > 1)
        .map(|((text, label), _)| (text, label))
        .collect();
    conflicts.sort();
    for (text, label) in conflicts {
        violations.push(Violation {
            record: None,
            kind: ViolationKind::ConflictingClasses,
            message: format!("({text:?}, {label:?}) is labeled both 0 and 1"),
        });
    }

    let k = cfg.negatives_per_positive;
    if negatives.abs_diff(positives * k) > k {
        violations.push(Violation {
            record: None,
            kind: ViolationKind::Imbalance,
            message: format!("{positives} positives and {negatives} negatives at ratio 1:{k}"),
        });
    }

    ValidationReport {
        checked: samples.len(),
        positives,
        negatives,
        violations,
    }
}
