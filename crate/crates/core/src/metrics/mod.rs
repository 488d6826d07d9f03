//! Evaluation metrics and the structures that hold benchmark results.
//!
//! AUROC uses the Mann-Whitney rank statistic with midrank tie handling;
//! multi-class scores are reduced by macro one-vs-rest averaging over the
//! classes that have both positives and negatives in the evaluated set.
//! F1 is macro-averaged over the classes present in the true labels. Both
//! conventions are recorded in the run manifest so result files are
//! self-describing.

pub mod auroc;
pub mod eval;
pub mod f1;

pub use auroc::{auroc_ovr_macro, binary_auroc, per_class_auroc};
pub use eval::{
    delta_vs_joint, eval_cell, evaluate_checkpoint, Cell, DeltaReport, EvalMatrix, EvalRow,
    TrendPoint,
};
pub use f1::{argmax, f1_macro};
