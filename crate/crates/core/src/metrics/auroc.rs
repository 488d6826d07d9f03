//! Area under the ROC curve.
//!
//! Computed through the Mann-Whitney U statistic: rank all scores (ties get
//! the average of the rank range they span), sum the ranks of the positives,
//! and normalize by the number of (positive, negative) pairs. This equals
//! the probability that a random positive outscores a random negative, with
//! ties counted one half, and needs only a sort instead of a pair sweep.
//! Every intermediate is a sum of halves of integers, so the result is
//! bit-identical to brute-force pair enumeration.

use crate::error::{Error, Result};

/// AUROC of one score column against binary membership. `None` when the set
/// has no positives or no negatives, which leaves the curve undefined.
///
/// Panics if the slices differ in length.
pub fn binary_auroc(scores: &[f64], is_positive: &[bool]) -> Option<f64> {
    assert_eq!(
        scores.len(),
        is_positive.len(),
        "scores and membership must align"
    );
    let n_pos = is_positive.iter().filter(|&&p| p).count();
    let n_neg = scores.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let ranks = midranks(scores);
    let rank_sum: f64 = ranks
        .iter()
        .zip(is_positive)
        .filter(|&(_, &p)| p)
        .map(|(r, _)| r)
        .sum();
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Some(u / (n_pos * n_neg) as f64)
}

/// One-based ranks with ties assigned the mean rank of their run.
fn midranks(scores: &[f64]) -> Vec<f64> {
    let n = scores.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let rank = (i + j + 2) as f64 / 2.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Per-class one-vs-rest AUROC from per-sample probability rows. Classes
/// without both positives and negatives get `None`.
pub fn per_class_auroc(probs: &[Vec<f64>], labels: &[usize]) -> Result<Vec<Option<f64>>> {
    if probs.is_empty() {
        return Err(Error::Input("no samples to score".into()));
    }
    if probs.len() != labels.len() {
        return Err(Error::Input(format!(
            "{} probability rows for {} labels",
            probs.len(),
            labels.len()
        )));
    }
    let num_classes = probs[0].len();
    if let Some(row) = probs.iter().find(|r| r.len() != num_classes) {
        return Err(Error::Input(format!(
            "probability rows have mixed widths ({} vs {})",
            row.len(),
            num_classes
        )));
    }
    if let Some(&label) = labels.iter().find(|&&l| l >= num_classes) {
        return Err(Error::Input(format!(
            "label {label} out of range for {num_classes} score columns"
        )));
    }
    let mut out = Vec::with_capacity(num_classes);
    let mut column = vec![0.0; probs.len()];
    let mut membership = vec![false; probs.len()];
    for class in 0..num_classes {
        for (i, row) in probs.iter().enumerate() {
            column[i] = row[class];
            membership[i] = labels[i] == class;
        }
        out.push(binary_auroc(&column, &membership));
    }
    Ok(out)
}

/// Macro one-vs-rest AUROC: the mean of the defined per-class values.
/// Errors when no class qualifies, keeping "undefined" distinct from 0.
pub fn auroc_ovr_macro(probs: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    let cells = per_class_auroc(probs, labels)?;
    let defined: Vec<f64> = cells.into_iter().flatten().collect();
    if defined.is_empty() {
        return Err(Error::MetricUndefined(
            "AUROC undefined: no class has both positives and negatives".into(),
        ));
    }
    Ok(defined.iter().sum::<f64>() / defined.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pairwise_auroc(scores: &[f64], is_positive: &[bool]) -> Option<f64> {
        let mut pairs = 0.0;
        let mut won = 0.0;
        for (i, &pos) in is_positive.iter().enumerate() {
            if !pos {
                continue;
            }
            for (j, &other) in is_positive.iter().enumerate() {
                if other {
                    continue;
                }
                pairs += 1.0;
                won += if scores[i] > scores[j] {
                    1.0
                } else if scores[i] == scores[j] {
                    0.5
                } else {
                    0.0
                };
            }
        }
        if pairs == 0.0 {
            None
        } else {
            Some(won / pairs)
        }
    }

    #[test]
    fn four_point_example_scores_three_quarters() {
        let auroc = binary_auroc(&[0.1, 0.4, 0.35, 0.8], &[false, false, true, true]).unwrap();
        assert_eq!(auroc, 0.75);
    }

    #[test]
    fn separated_classes_score_one() {
        let auroc = binary_auroc(&[0.1, 0.2, 0.8, 0.9], &[false, false, true, true]).unwrap();
        assert_eq!(auroc, 1.0);
    }

    #[test]
    fn constant_scores_score_half() {
        let auroc = binary_auroc(&[0.3; 7], &[true, false, true, false, false, true, false]);
        assert_eq!(auroc, Some(0.5));
    }

    #[test]
    fn single_class_is_undefined() {
        assert_eq!(binary_auroc(&[0.1, 0.2], &[true, true]), None);
        assert_eq!(binary_auroc(&[0.1, 0.2], &[false, false]), None);
        assert_eq!(binary_auroc(&[], &[]), None);
    }

    #[test]
    fn macro_of_two_classes_matches_binary() {
        let scores = [0.1, 0.4, 0.35, 0.8];
        let labels = [0usize, 0, 1, 1];
        let probs: Vec<Vec<f64>> = scores.iter().map(|&s| vec![1.0 - s, s]).collect();
        let macro_auroc = auroc_ovr_macro(&probs, &labels).unwrap();
        assert_eq!(macro_auroc, 0.75);
    }

    #[test]
    fn absent_class_is_excluded_from_macro() {
        // Class 2 never appears, so only classes 0 and 1 contribute.
        let probs = vec![
            vec![0.7, 0.2, 0.1],
            vec![0.6, 0.3, 0.1],
            vec![0.2, 0.7, 0.1],
            vec![0.4, 0.5, 0.1],
        ];
        let labels = [0usize, 0, 1, 1];
        let cells = per_class_auroc(&probs, &labels).unwrap();
        assert_eq!(cells[2], None);
        let expected = (cells[0].unwrap() + cells[1].unwrap()) / 2.0;
        assert_eq!(auroc_ovr_macro(&probs, &labels).unwrap(), expected);
    }

    #[test]
    fn no_qualifying_class_is_an_error() {
        let probs = vec![vec![0.9, 0.05, 0.05], vec![0.8, 0.1, 0.1]];
        let err = auroc_ovr_macro(&probs, &[0, 0]).unwrap_err();
        assert!(matches!(err, crate::Error::MetricUndefined(_)), "{err}");
    }

    #[test]
    fn label_out_of_range_is_rejected() {
        let probs = vec![vec![0.5, 0.5]];
        let err = auroc_ovr_macro(&probs, &[2]).unwrap_err();
        assert!(err.to_string().contains("out of range"), "{err}");
    }

    proptest! {
        #[test]
        fn rank_statistic_matches_pair_enumeration(
            quantized in prop::collection::vec((0u8..6, any::<bool>()), 1..24)
        ) {
            // Coarse quantization forces frequent ties.
            let scores: Vec<f64> = quantized.iter().map(|&(q, _)| q as f64 / 5.0).collect();
            let membership: Vec<bool> = quantized.iter().map(|&(_, p)| p).collect();
            prop_assert_eq!(
                binary_auroc(&scores, &membership),
                pairwise_auroc(&scores, &membership)
            );
        }

        #[test]
        fn invariant_under_strictly_increasing_transform(
            quantized in prop::collection::vec((0u8..6, any::<bool>()), 2..24)
        ) {
            let scores: Vec<f64> = quantized.iter().map(|&(q, _)| q as f64 / 5.0).collect();
            let membership: Vec<bool> = quantized.iter().map(|&(_, p)| p).collect();
            let cubed: Vec<f64> = scores.iter().map(|&s| s * s * s / 2.0).collect();
            prop_assert_eq!(
                binary_auroc(&scores, &membership),
                binary_auroc(&cubed, &membership)
            );
        }
    }
}
