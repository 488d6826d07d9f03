//! Per-strategy results file: everything a report needs, nothing volatile.
//!
//! Wall-clock time is deliberately absent (it lives in the manifest), so a
//! rerun with the same config writes byte-identical records.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use driftbench_core::metrics::{EvalMatrix, TrendPoint};
use driftbench_core::strategies::{ProtocolResult, StrategyKind, TrainLog};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyRecord {
    pub strategy: StrategyKind,
    pub stage_labels: Vec<String>,
    pub matrix: EvalMatrix,
    pub trend: Vec<TrendPoint>,
    pub log: TrainLog,
}

impl StrategyRecord {
    pub fn from_result(result: &ProtocolResult) -> Self {
        StrategyRecord {
            strategy: result.strategy,
            stage_labels: result.stage_labels.clone(),
            matrix: result.matrix.clone(),
            trend: result.trend.clone(),
            log: result.log.clone(),
        }
    }

    pub fn file_name(strategy: StrategyKind) -> String {
        format!("results_{}.json", strategy.name())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| HarnessError::Runtime(format!("cannot serialize results: {e}")))?;
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| HarnessError::Runtime(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| HarnessError::Runtime(format!("malformed results {}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use driftbench_core::metrics::{Cell, EvalRow};
    use driftbench_core::strategies::{EpochLog, TrainLog};

    #[test]
    fn records_round_trip_through_json_exactly() {
        let mut matrix = EvalMatrix::new(vec!["a".into(), "b".into()]);
        matrix
            .push_row(EvalRow {
                label: "after a".into(),
                cells: vec![
                    Cell { auroc: Some(0.123456789012345), f1: 0.5 },
                    Cell { auroc: None, f1: 1.0 / 3.0 },
                ],
            })
            .unwrap();
        let record = StrategyRecord {
            strategy: StrategyKind::Naive,
            stage_labels: vec!["after a".into()],
            matrix,
            trend: vec![TrendPoint {
                epoch: 1,
                auroc: Some(0.9999999999999999),
                f1: 0.25,
                experience_boundary: false,
            }],
            log: TrainLog {
                epochs: vec![EpochLog {
                    stage: 0,
                    epoch: 1,
                    l_c: std::f64::consts::LN_2,
                    weighted_l_e: 0.0,
                    r_term: 1e-300,
                    samples: 17,
                    wall_seconds: 3.5,
                }],
            },
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(StrategyRecord::file_name(StrategyKind::Naive));
        record.save(&path).unwrap();
        let loaded = StrategyRecord::load(&path).unwrap();
        // Wall time is volatile and must not survive the trip; everything
        // else must come back bit-for-bit.
        assert_eq!(loaded.log.epochs[0].wall_seconds, 0.0);
        let mut expected = record.clone();
        expected.log.epochs[0].wall_seconds = 0.0;
        assert_eq!(loaded, expected);
        assert_eq!(loaded.log.epochs[0].r_term.to_bits(), 1e-300_f64.to_bits());
    }
}
