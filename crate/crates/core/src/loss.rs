use crate::error::{CatError, Result};
use crate::tensor::Matrix;

/// Mean squared error over a batch of single-output predictions.
pub fn mse_loss(pred: &Matrix, target: &[f64]) -> Result<(f64, Matrix)> {
    if pred.cols() != 1 || pred.rows() != target.len() || target.is_empty() {
        return Err(CatError::Shape(format!(
            "mse: predictions {:?} vs {} targets",
            pred.shape(),
            target.len()
        )));
    }
    let n = target.len() as f64;
    let mut grad = Matrix::zeros(pred.rows(), 1);
    let mut total = 0.0;
    for (i, (&p, &t)) in pred.as_slice().iter().zip(target).enumerate() {
        let e = p - t;
        total += e * e;
        grad.set(i, 0, 2.0 * e / n);
    }
    Ok((total / n, grad))
}

/// Mean softmax cross-entropy of `logits` (rows are samples) against labels.
pub fn softmax_xent_loss(logits: &Matrix, labels: &[usize]) -> Result<(f64, Matrix)> {
    if logits.rows() != labels.len() || labels.is_empty() {
        return Err(CatError::Shape(format!(
            "xent: logits {:?} vs {} labels",
            logits.shape(),
            labels.len()
        )));
    }
    let classes = logits.cols();
    if let Some((i, &l)) = labels.iter().enumerate().find(|(_, &l)| l >= classes) {
        return Err(CatError::Data {
            row: Some(i),
            detail: format!("label {l} out of range for {classes} classes"),
        });
    }
    let n = labels.len() as f64;
    let mut grad = Matrix::zeros(logits.rows(), classes);
    let mut total = 0.0;
    for (r, &label) in labels.iter().enumerate() {
        let row = logits.row(r);
        let (top, max) = row
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (c, v)| if v > best.1 { (c, v) } else { best });
        // log Σ exp = max + log1p(Σ_{c≠top} exp(v_c − max)), exact for confident rows
        let rest: f64 = row.iter().enumerate().filter(|&(c, _)| c != top).map(|(_, v)| (v - max).exp()).sum();
        let log_sum = max + rest.ln_1p();
        total += rest.ln_1p() + (max - row[label]);
        for (c, g) in grad.row_mut(r).iter_mut().enumerate() {
            let p = (row[c] - log_sum).exp();
            *g = (p - if c == label { 1.0 } else { 0.0 }) / n;
        }
    }
    Ok((total / n, grad))
}

pub fn softmax(row: &[f64]) -> Vec<f64> {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = row.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}
