//! RMSE, accuracy and macro-F1.

use serde::{Deserialize, Serialize};

use crate::error::{CatError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub metric: String,
    pub value: f64,
    /// Per-class F1 for classification metrics.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub per_class: Vec<f64>,
    pub count: usize,
}

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(CatError::Shape(format!("length mismatch: {a} vs {b}")));
    }
    if a == 0 {
        return Err(CatError::Shape("metrics need at least one sample".into()));
    }
    Ok(())
}

pub fn rmse(pred: &[f64], target: &[f64]) -> Result<f64> {
    check_lengths(pred.len(), target.len())?;
    let sse: f64 = pred.iter().zip(target).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok((sse / pred.len() as f64).sqrt())
}

pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    check_lengths(pred.len(), truth.len())?;
    let hits = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / pred.len() as f64)
}

/// Per-class F1 scores. A class never predicted and never present scores 0.
pub fn per_class_f1(pred: &[usize], truth: &[usize], classes: usize) -> Result<Vec<f64>> {
    check_lengths(pred.len(), truth.len())?;
    if let Some(&l) = pred.iter().chain(truth).find(|&&l| l >= classes) {
        return Err(CatError::Data {
            row: None,
            detail: format!("label {l} out of range for {classes} classes"),
        });
    }
    let mut tp = vec![0usize; classes];
    let mut predicted = vec![0usize; classes];
    let mut actual = vec![0usize; classes];
    for (&p, &t) in pred.iter().zip(truth) {
        predicted[p] += 1;
        actual[t] += 1;
        if p == t {
            tp[p] += 1;
        }
    }
    Ok((0..classes)
        .map(|c| {
            // F1 = 2PR/(P+R) = 2 tp / (predicted + actual)
            let denom = predicted[c] + actual[c];
            if denom == 0 {
                0.0
            } else {
                2.0 * tp[c] as f64 / denom as f64
            }
        })
        .collect())
}

pub fn macro_f1(pred: &[usize], truth: &[usize], classes: usize) -> Result<f64> {
    let f1 = per_class_f1(pred, truth, classes)?;
    Ok(f1.iter().sum::<f64>() / classes as f64)
}

pub fn evaluate_regression(pred: &[f64], target: &[f64]) -> Result<EvalResult> {
    Ok(EvalResult {
        metric: "rmse".into(),
        value: rmse(pred, target)?,
        per_class: Vec::new(),
        count: pred.len(),
    })
}

/// Accuracy and macro-F1 results for a classification run.
pub fn evaluate_classification(pred: &[usize], truth: &[usize], classes: usize) -> Result<[EvalResult; 2]> {
    let per_class = per_class_f1(pred, truth, classes)?;
    let macro_value = per_class.iter().sum::<f64>() / classes as f64;
    Ok([
        EvalResult {
            metric: "accuracy".into(),
            value: accuracy(pred, truth)?,
            per_class: Vec::new(),
            count: pred.len(),
        },
        EvalResult {
            metric: "macro_f1".into(),
            value: macro_value,
            per_class,
            count: pred.len(),
        },
    ])
}
