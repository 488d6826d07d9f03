//! Macro-averaged F1 score over hard label predictions.

use crate::error::{Error, Result};

/// Index of the largest value; the lowest index wins ties so predictions
/// are deterministic.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Macro F1 over the classes present in the true labels. Per class,
/// F1 = 2TP / (2TP + FP + FN), taken as 0 when the denominator is zero
/// (precision and recall both empty).
pub fn f1_macro(preds: &[usize], labels: &[usize]) -> Result<f64> {
    if labels.is_empty() {
        return Err(Error::Input("no samples to score".into()));
    }
    if preds.len() != labels.len() {
        return Err(Error::Input(format!(
            "{} predictions for {} labels",
            preds.len(),
            labels.len()
        )));
    }
    let num_classes = preds.iter().chain(labels).max().unwrap() + 1;
    let mut tp = vec![0usize; num_classes];
    let mut fp = vec![0usize; num_classes];
    let mut fn_ = vec![0usize; num_classes];
    let mut present = vec![false; num_classes];
    for (&p, &l) in preds.iter().zip(labels) {
        present[l] = true;
        if p == l {
            tp[l] += 1;
        } else {
            fp[p] += 1;
            fn_[l] += 1;
        }
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for c in 0..num_classes {
        if !present[c] {
            continue;
        }
        let denom = 2 * tp[c] + fp[c] + fn_[c];
        if denom > 0 {
            sum += 2.0 * tp[c] as f64 / denom as f64;
        }
        count += 1;
    }
    Ok(sum / count as f64)
}
