//! Entailment-style zero-shot classification.
//!
//! Each candidate label is wrapped in a hypothesis ("Dëst Beispill ass iwwer
//! {label}."), every (text, hypothesis) pair is scored independently by an
//! [`EntailmentScorer`], and the label with the highest entailment
//! probability wins.

mod metrics;
mod remote;
mod scorer;

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use metrics::{evaluate, predict, ClassMetrics, EvalReport, PredictError};
pub use remote::{RemoteConfig, RemoteError, RemoteScorer};
pub use scorer::{EntailmentScorer, Hypothesis, LexicalScorer, OracleScorer, PairOracleScorer, ScorerError};

use crate::generate::LabeledSample;

pub const DEFAULT_TEMPLATE: &str = "Dëst Beispill ass iwwer {label}.";
const PLACEHOLDER: &str = "{label}";

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("hypothesis template must contain `{{label}}` exactly once: {0:?}")]
    Template(String),
    #[error("label map: {0}")]
    LabelMap(String),
    #[error("{path}:{line}: {message}")]
    Schema { path: String, line: usize, message: String },
    #[error("example {example}, label {label:?}: {source}")]
    Scoring {
        example: usize,
        label: String,
        #[source]
        source: ScorerError,
    },
    #[error("score matrix is {rows}x{cols} but the dataset needs {want_rows}x{want_cols}")]
    Dimensions {
        rows: usize,
        cols: usize,
        want_rows: usize,
        want_cols: usize,
    },
    #[error("score ({row}, {col}) = {value} is outside [0, 1]")]
    ScoreOutOfRange { row: usize, col: usize, value: f64 },
    #[error(transparent)]
    Predict(#[from] PredictError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HypothesisTemplate(String);

impl HypothesisTemplate {
    pub fn new(template: impl Into<String>) -> Result<Self, EvalError> {
        let template = template.into();
        if template.matches(PLACEHOLDER).count() != 1 {
            return Err(EvalError::Template(template));
        }
        Ok(Self(template))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn render(&self, label: &str) -> String {
        self.0.replacen(PLACEHOLDER, label, 1)
    }
}

impl Default for HypothesisTemplate {
    fn default() -> Self {
        Self(DEFAULT_TEMPLATE.to_owned())
    }
}

pub fn render_hypothesis(tpl: &HypothesisTemplate, label: &str) -> String {
    tpl.render(label)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelEntry {
    /// Class id as it appears in the evaluation file, e.g. `Sports`.
    pub class: String,
    /// Label word inserted into the hypothesis, e.g. `Sport`.
    pub label: String,
    /// Expected number of evaluation samples, if known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
}

/// Ordered class -> label-word map.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelMap {
    pub name: String,
    pub classes: Vec<LabelEntry>,
}

impl LabelMap {
    pub fn new(name: impl Into<String>, classes: Vec<LabelEntry>) -> Result<Self, EvalError> {
        let map = Self {
            name: name.into(),
            classes,
        };
        map.check()?;
        Ok(map)
    }

    fn check(&self) -> Result<(), EvalError> {
        if self.classes.len() < 2 {
            return Err(EvalError::LabelMap("need at least two classes".into()));
        }
        let mut ids = HashSet::new();
        let mut words = HashSet::new();
        for c in &self.classes {
            if !ids.insert(c.class.as_str()) {
                return Err(EvalError::LabelMap(format!("duplicate class {:?}", c.class)));
            }
            if c.label.trim().is_empty() {
                return Err(EvalError::LabelMap(format!("empty label for class {:?}", c.class)));
            }
            if !words.insert(c.label.as_str()) {
                return Err(EvalError::LabelMap(format!("duplicate label word {:?}", c.label)));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, EvalError> {
        let map: LabelMap = serde_json::from_str(text).map_err(|e| EvalError::LabelMap(e.to_string()))?;
        map.check()?;
        Ok(map)
    }

    pub fn load(path: &Path) -> Result<Self, EvalError> {
        let text = std::fs::read_to_string(path).map_err(|source| EvalError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn index_of(&self, class: &str) -> Option<usize> {
        self.classes.iter().position(|c| c.class == class)
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.classes.iter().map(|c| c.label.as_str())
    }

    /// LuxNews restricted to its five topical classes.
    pub fn luxnews() -> Self {
        Self::from_json(include_str!("../../data/labels/luxnews.json")).expect("bundled map is valid")
    }

    /// Luxembourgish SIB-200, all seven classes.
    pub fn sib200() -> Self {
        Self::from_json(include_str!("../../data/labels/sib200.json")).expect("bundled map is valid")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalExample {
    pub text: String,
    pub gold_class: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalDataset {
    pub name: String,
    pub examples: Vec<EvalExample>,
    pub label_map: LabelMap,
    /// `gold[i]` is the label-map index of `examples[i].gold_class`.
    gold: Vec<usize>,
}

impl EvalDataset {
    pub fn new(name: impl Into<String>, examples: Vec<EvalExample>, label_map: LabelMap) -> Result<Self, EvalError> {
        label_map.check()?;
        let gold = examples
            .iter()
            .enumerate()
            .map(|(i, ex)| {
                label_map.index_of(&ex.gold_class).ok_or_else(|| {
                    EvalError::LabelMap(format!(
                        "example {i}: class {:?} is not in the label map",
                        ex.gold_class
                    ))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            name: name.into(),
            examples,
            label_map,
            gold,
        })
    }

    /// Reads `{text, gold_class}` lines.
    pub fn load(path: &Path, label_map: LabelMap) -> Result<Self, EvalError> {
        let origin = path.display().to_string();
        let file = File::open(path).map_err(|source| EvalError::Io {
            path: origin.clone(),
            source,
        })?;
        let mut examples = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|source| EvalError::Io {
                path: origin.clone(),
                source,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let ex: EvalExample = serde_json::from_str(&line).map_err(|e| EvalError::Schema {
                path: origin.clone(),
                line: i + 1,
                message: e.to_string(),
            })?;
            examples.push(ex);
        }
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Self::new(name, examples, label_map)
    }

    pub fn gold(&self) -> &[usize] {
        &self.gold
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }
}

/// Row-major matrix of entailment probabilities, one row per example and one
/// column per label in label-map order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl ScoreMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, EvalError> {
        let cols = rows.first().map_or(0, Vec::len);
        let n = rows.len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(EvalError::Dimensions {
                rows: n,
                cols,
                want_rows: n,
                want_cols: cols,
            });
        }
        let data: Vec<f64> = rows.into_iter().flatten().collect();
        if let Some(pos) = data.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(EvalError::ScoreOutOfRange {
                row: pos / cols,
                col: pos % cols,
                value: data[pos],
            });
        }
        Ok(Self { rows: n, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }
}

/// Scores every (example, label) pair independently. Pairs are dispatched in
/// parallel on the current rayon pool; results are placed by position.
pub fn score_matrix(
    dataset: &EvalDataset,
    tpl: &HypothesisTemplate,
    scorer: &dyn EntailmentScorer,
) -> Result<ScoreMatrix, EvalError> {
    let labels: Vec<&str> = dataset.label_map.labels().collect();
    let cols = labels.len();
    let cells = dataset.len() * cols;
    let data = (0..cells)
        .into_par_iter()
        .map(|cell| {
            let (i, j) = (cell / cols, cell % cols);
            let hyp = Hypothesis {
                label: labels[j].to_owned(),
                text: tpl.render(labels[j]),
            };
            let err = |source| EvalError::Scoring {
                example: i,
                label: labels[j].to_owned(),
                source,
            };
            let probs = scorer
                .score(&dataset.examples[i].text, std::slice::from_ref(&hyp))
                .map_err(err)?;
            match probs.as_slice() {
                [p] if (0.0..=1.0).contains(p) => Ok(*p),
                [p] => Err(err(ScorerError::OutOfRange { index: 0, value: *p })),
                other => Err(err(ScorerError::LengthMismatch {
                    expected: 1,
                    got: other.len(),
                })),
            }
        })
        .collect::<Result<Vec<f64>, _>>()?;
    Ok(ScoreMatrix {
        rows: dataset.len(),
        cols,
        data,
    })
}

/// Binary view of a labeled (text, label, class) dataset: two classes,
/// `"0"` (non-entailment) and `"1"` (entailment).
pub fn binary_label_map() -> LabelMap {
    LabelMap {
        name: "entailment".into(),
        classes: vec![
            LabelEntry {
                class: "0".into(),
                label: "non-entailment".into(),
                n: None,
            },
            LabelEntry {
                class: "1".into(),
                label: "entailment".into(),
                n: None,
            },
        ],
    }
}

/// Scores each labeled pair as a binary entailment decision: row `i` is
/// `[1 - p, p]` where `p` is the scorer's probability that the sample's
/// label hypothesis is entailed by its text. Feeding the result to
/// [`evaluate`] predicts class 1 iff `p > 0.5`.
pub fn evaluate_pairs(
    samples: &[LabeledSample],
    tpl: &HypothesisTemplate,
    scorer: &dyn EntailmentScorer,
) -> Result<(EvalDataset, ScoreMatrix, EvalReport), EvalError> {
    let examples = samples
        .iter()
        .map(|s| EvalExample {
            text: s.text.clone(),
            gold_class: s.class.to_string(),
        })
        .collect();
    let dataset = EvalDataset::new("pairs", examples, binary_label_map())?;
    let rows = samples
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let hyp = Hypothesis {
                label: s.label.clone(),
                text: tpl.render(&s.label),
            };
            let err = |source| EvalError::Scoring {
                example: i,
                label: s.label.clone(),
                source,
            };
            let probs = scorer.score(&s.text, std::slice::from_ref(&hyp)).map_err(err)?;
            match probs.as_slice() {
                [p] => Ok(vec![1.0 - p, *p]),
                other => Err(err(ScorerError::LengthMismatch {
                    expected: 1,
                    got: other.len(),
                })),
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    let matrix = ScoreMatrix::from_rows(rows)?;
    let report = evaluate(&dataset, &matrix)?;
    Ok((dataset, matrix, report))
}
