//! Checkpoint evaluation: the strategy x test-set result matrix, the
//! union-test trend series, and deltas against the joint baseline.

use serde::{Deserialize, Serialize};

use crate::data::{batch_from, Sample};
use crate::error::{Error, Result};
use crate::metrics::auroc::auroc_ovr_macro;
use crate::metrics::f1::{argmax, f1_macro};
use crate::model::LayeredNet;

/// Samples scored per forward pass while evaluating.
const EVAL_CHUNK: usize = 256;

/// One matrix cell. AUROC is `None` when no class in the set had both
/// positives and negatives; F1 is always defined on a non-empty set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub auroc: Option<f64>,
    pub f1: f64,
}

/// One checkpoint evaluated against every test set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    /// Checkpoint descriptor, e.g. "after dom0" or "joint".
    pub label: String,
    pub cells: Vec<Cell>,
}

/// Rows of checkpoints against a fixed list of test sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalMatrix {
    pub test_sets: Vec<String>,
    pub rows: Vec<EvalRow>,
}

impl EvalMatrix {
    pub fn new(test_sets: Vec<String>) -> Self {
        EvalMatrix {
            test_sets,
            rows: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: EvalRow) -> Result<()> {
        if row.cells.len() != self.test_sets.len() {
            return Err(Error::Input(format!(
                "row \"{}\" has {} cells for {} test sets",
                row.label,
                row.cells.len(),
                self.test_sets.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn last_row(&self) -> Option<&EvalRow> {
        self.rows.last()
    }
}

/// One union-test measurement taken during training.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendPoint {
    /// Global epoch index across the whole stream, starting at 1.
    pub epoch: usize,
    pub auroc: Option<f64>,
    pub f1: f64,
    /// True on the first evaluated epoch of each experience after the first.
    pub experience_boundary: bool,
}

/// Final-checkpoint differences against the joint baseline, positive when
/// joint is better.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaReport {
    pub test_sets: Vec<String>,
    pub d_auroc: Vec<Option<f64>>,
    pub d_f1: Vec<f64>,
}

/// Scores one test set with the given network.
pub fn eval_cell(net: &LayeredNet, samples: &[Sample]) -> Result<Cell> {
    if samples.is_empty() {
        return Err(Error::Input("cannot evaluate an empty test set".into()));
    }
    let mut probs: Vec<Vec<f64>> = Vec::with_capacity(samples.len());
    let mut labels: Vec<usize> = Vec::with_capacity(samples.len());
    let indices: Vec<usize> = (0..samples.len()).collect();
    for chunk in indices.chunks(EVAL_CHUNK) {
        let (x, y) = batch_from(samples, chunk)?;
        probs.extend(net.predict_batch(&x)?);
        labels.extend(y);
    }
    let auroc = match auroc_ovr_macro(&probs, &labels) {
        Ok(v) => Some(v),
        Err(Error::MetricUndefined(_)) => None,
        Err(e) => return Err(e),
    };
    let preds: Vec<usize> = probs.iter().map(|row| argmax(row)).collect();
    let f1 = f1_macro(&preds, &labels)?;
    Ok(Cell { auroc, f1 })
}

/// Evaluates one checkpoint against every test set, in order.
pub fn evaluate_checkpoint(
    net: &LayeredNet,
    label: &str,
    test_sets: &[&[Sample]],
) -> Result<EvalRow> {
    let mut cells = Vec::with_capacity(test_sets.len());
    for samples in test_sets {
        cells.push(eval_cell(net, samples)?);
    }
    Ok(EvalRow {
        label: label.to_string(),
        cells,
    })
}

/// Difference between the joint baseline and a sequential strategy, both
/// taken at their final row. An AUROC delta is `None` when either side was
/// undefined on that set.
pub fn delta_vs_joint(strategy: &EvalMatrix, joint: &EvalMatrix) -> Result<DeltaReport> {
    if strategy.test_sets != joint.test_sets {
        return Err(Error::Input(format!(
            "test-set columns differ: [{}] vs [{}]",
            strategy.test_sets.join(", "),
            joint.test_sets.join(", ")
        )));
    }
    let final_row = strategy
        .last_row()
        .ok_or_else(|| Error::Input("strategy matrix has no rows".into()))?;
    let joint_row = joint
        .last_row()
        .ok_or_else(|| Error::Input("joint matrix has no rows".into()))?;
    let mut d_auroc = Vec::with_capacity(final_row.cells.len());
    let mut d_f1 = Vec::with_capacity(final_row.cells.len());
    for (s, j) in final_row.cells.iter().zip(&joint_row.cells) {
        d_auroc.push(match (j.auroc, s.auroc) {
            (Some(jv), Some(sv)) => Some(jv - sv),
            _ => None,
        });
        d_f1.push(j.f1 - s.f1);
    }
    Ok(DeltaReport {
        test_sets: strategy.test_sets.clone(),
        d_auroc,
        d_f1,
    })
}
