use serde::Serialize;
use thiserror::Error;

use super::{EvalDataset, EvalError, ScoreMatrix};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PredictError {
    #[error("cannot take the argmax of an empty row")]
    EmptyRow,
    #[error("row contains NaN at position {0}")]
    NaN(usize),
}

/// Index of the largest score; ties go to the lowest index.
pub fn predict(row: &[f64]) -> Result<usize, PredictError> {
    if row.is_empty() {
        return Err(PredictError::EmptyRow);
    }
    if let Some(i) = row.iter().position(|v| v.is_nan()) {
        return Err(PredictError::NaN(i));
    }
    let mut best = 0;
    for (i, v) in row.iter().enumerate().skip(1) {
        if *v > row[best] {
            best = i;
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub class: String,
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub dataset: String,
    pub total: usize,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub per_class: Vec<ClassMetrics>,
    /// `confusion[gold][predicted]`
    pub confusion: Vec<Vec<usize>>,
    pub predictions: Vec<usize>,
    pub f1_convention: &'static str,
    pub tie_break: &'static str,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Argmax predictions per row, then accuracy and unweighted macro-F1. A class
/// with precision + recall = 0 contributes an F1 of 0.
pub fn evaluate(dataset: &EvalDataset, matrix: &ScoreMatrix) -> Result<EvalReport, EvalError> {
    let n = dataset.label_map.len();
    if matrix.rows() != dataset.len() || (matrix.rows() > 0 && matrix.cols() != n) {
        return Err(EvalError::Dimensions {
            rows: matrix.rows(),
            cols: matrix.cols(),
            want_rows: dataset.len(),
            want_cols: n,
        });
    }
    let predictions = (0..matrix.rows())
        .map(|i| predict(matrix.row(i)))
        .collect::<Result<Vec<_>, _>>()?;

    let mut confusion = vec![vec![0usize; n]; n];
    for (&g, &p) in dataset.gold().iter().zip(&predictions) {
        confusion[g][p] += 1;
    }
    let correct: usize = (0..n).map(|k| confusion[k][k]).sum();
    let per_class: Vec<ClassMetrics> = dataset
        .label_map
        .classes
        .iter()
        .enumerate()
        .map(|(k, entry)| {
            let tp = confusion[k][k];
            let support: usize = confusion[k].iter().sum();
            let predicted: usize = confusion.iter().map(|row| row[k]).sum();
            let precision = ratio(tp, predicted);
            let recall = ratio(tp, support);
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            ClassMetrics {
                class: entry.class.clone(),
                label: entry.label.clone(),
                precision,
                recall,
                f1,
                support,
            }
        })
        .collect();
    let macro_f1 = per_class.iter().map(|c| c.f1).sum::<f64>() / n as f64;

    Ok(EvalReport {
        dataset: dataset.name.clone(),
        total: dataset.len(),
        accuracy: ratio(correct, dataset.len()),
        macro_f1,
        per_class,
        confusion,
        predictions,
        f1_convention: "zero-when-undefined",
        tie_break: "lowest-index",
    })
}
