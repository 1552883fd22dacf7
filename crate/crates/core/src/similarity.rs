//! Edit-distance kernel and the similarity predicate shared by the
//! orthographic-variant filter and the negative-label exclusion check.

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

#[derive(Debug, Error, PartialEq)]
pub enum SimilarityError {
    #[error("similarity.threshold must lie in [0, 1], got {0}")]
    ThresholdOutOfRange(f64),
}

/// How two folded strings are compared against the cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DistanceMetric {
    /// `levenshtein / max(len)` compared against `threshold` with `<`.
    #[default]
    Normalized,
    /// Raw edit distance compared against `raw_max_distance` with `<=`.
    Raw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimilarityConfig {
    pub threshold: f64,
    pub case_fold: bool,
    pub strip_diacritics: bool,
    pub metric: DistanceMetric,
    pub raw_max_distance: usize,
}

impl Default for SimilarityConfig {
    fn default() -> Self {
        Self {
            threshold: 0.34,
            case_fold: true,
            strip_diacritics: true,
            metric: DistanceMetric::Normalized,
            raw_max_distance: 1,
        }
    }
}

impl SimilarityConfig {
    pub fn with_threshold(threshold: f64) -> Self {
        Self {
            threshold,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SimilarityError> {
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(SimilarityError::ThresholdOutOfRange(self.threshold));
        }
        Ok(())
    }

    /// Applies case and diacritic folding as configured.
    pub fn fold(&self, s: &str) -> String {
        let cased: String = if self.case_fold {
            s.chars().flat_map(char::to_lowercase).collect()
        } else {
            s.to_owned()
        };
        if self.strip_diacritics {
            cased.nfd().filter(|c| !is_combining_mark(*c)).nfc().collect()
        } else {
            cased
        }
    }
}

/// Unit-cost edit distance over Unicode scalar values.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    levenshtein_chars(&a, &b)
}

fn levenshtein_chars(a: &[char], b: &[char]) -> usize {
    // keep the row over the shorter side
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    if short.is_empty() {
        return long.len();
    }
    let mut prev: Vec<usize> = (0..=short.len()).collect();
    let mut cur = vec![0usize; short.len() + 1];
    for (j, lc) in long.iter().enumerate() {
        cur[0] = j + 1;
        for (i, sc) in short.iter().enumerate() {
            let sub = prev[i] + usize::from(sc != lc);
            cur[i + 1] = sub.min(prev[i + 1] + 1).min(cur[i] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[short.len()]
}

/// Edit distance of the folded strings divided by the longer folded length.
/// Two empty strings are at distance 0.
pub fn normalized_distance(a: &str, b: &str, cfg: &SimilarityConfig) -> f64 {
    let fa: Vec<char> = cfg.fold(a).chars().collect();
    let fb: Vec<char> = cfg.fold(b).chars().collect();
    let longest = fa.len().max(fb.len());
    if longest == 0 {
        return 0.0;
    }
    levenshtein_chars(&fa, &fb) as f64 / longest as f64
}

/// True when the folded strings are equal or fall under the configured cutoff.
pub fn is_similar(a: &str, b: &str, cfg: &SimilarityConfig) -> bool {
    let fa: Vec<char> = cfg.fold(a).chars().collect();
    let fb: Vec<char> = cfg.fold(b).chars().collect();
    if fa == fb {
        return true;
    }
    let dist = levenshtein_chars(&fa, &fb);
    match cfg.metric {
        DistanceMetric::Normalized => {
            let longest = fa.len().max(fb.len());
            (dist as f64 / longest as f64) < cfg.threshold
        }
        DistanceMetric::Raw => dist <= cfg.raw_max_distance,
    }
}

/// Whitespace tokenization with edge punctuation stripped; inner
/// apostrophes and hyphens survive ("d'Adress" stays one token).
pub fn tokenize(sentence: &str) -> Vec<&str> {
    sentence
        .split_whitespace()
        .map(|tok| tok.trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|tok| !tok.is_empty())
        .collect()
}

pub fn similar_to_any_token(word: &str, sentence: &str, cfg: &SimilarityConfig) -> bool {
    tokenize(sentence).into_iter().any(|tok| is_similar(word, tok, cfg))
}
