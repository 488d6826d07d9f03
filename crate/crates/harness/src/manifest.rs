//! The run manifest: volatile facts (timestamps, wall clock) plus the
//! artifact inventory and the metric conventions the numbers were computed
//! under. Everything volatile lives here and only here, which is what lets
//! a rerun write byte-identical results and report files.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use driftbench_core::strategies::{ProtocolResult, StrategyKind};

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    /// SHA-256 of the config file bytes, hex encoded.
    pub config_sha256: String,
    pub config_version: u32,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub strategies: Vec<StrategySummary>,
    /// Training-volume comparison, present when a joint run and a
    /// sequential run are both in the manifest. `joint_samples` counts every
    /// sample presentation of the joint run; `last_finetune_samples` counts
    /// the final experience of the sequential run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_ratio: Option<SampleRatio>,
    /// Joint wall time over the last sequential stage's wall time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_ratio_joint_vs_last_finetune: Option<f64>,
    pub metrics: MetricConventions,
    /// Every file the run wrote, relative to the results directory.
    pub artifacts: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StrategySummary {
    pub strategy: StrategyKind,
    pub checkpoints: usize,
    pub epochs: usize,
    pub total_samples: usize,
    /// Sample presentations per stage (a single entry for joint).
    pub stage_samples: Vec<usize>,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleRatio {
    pub joint_samples: usize,
    pub last_finetune_samples: usize,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricConventions {
    pub auroc: String,
    pub f1: String,
    pub undefined_cells: String,
    pub tables: String,
}

impl Default for MetricConventions {
    fn default() -> Self {
        MetricConventions {
            auroc: "macro one-vs-rest over classes with both positives and negatives \
                    in the test set; binary scores are ranked with midranks for ties"
                .into(),
            f1: "macro over classes present in the true labels; a class with no \
                 predictions and no hits scores 0"
                .into(),
            undefined_cells: "an AUROC cell for a test set that lacks a qualifying \
                              class is empty, not 0, and excluded from averages"
                .into(),
            tables: "table CSVs carry 4 fractional digits with a '.' decimal; \
                     *_full.csv twins and trend.csv carry full precision"
                .into(),
        }
    }
}

pub fn build(
    config: &ExperimentConfig,
    config_sha256: String,
    started_unix: u64,
    finished_unix: u64,
    results: &[(StrategyKind, ProtocolResult)],
    artifacts: Vec<String>,
) -> RunManifest {
    let strategies: Vec<StrategySummary> = results
        .iter()
        .map(|(kind, result)| {
            let stages = result.stage_labels.len();
            StrategySummary {
                strategy: *kind,
                checkpoints: stages,
                epochs: result.log.epochs.len(),
                total_samples: result.log.total_samples(),
                stage_samples: (0..stages).map(|s| result.log.stage_samples(s)).collect(),
                wall_seconds: result.log.total_wall_seconds(),
            }
        })
        .collect();

    let joint = results.iter().find(|(k, _)| *k == StrategyKind::Joint);
    let sequential = results.iter().find(|(k, _)| *k != StrategyKind::Joint);
    let sample_ratio = joint.zip(sequential).map(|((_, j), (_, s))| {
        let last_stage = s.stage_labels.len() - 1;
        let last = s.log.stage_samples(last_stage);
        SampleRatio {
            joint_samples: j.log.total_samples(),
            last_finetune_samples: last,
            ratio: j.log.total_samples() as f64 / last as f64,
        }
    });
    let wall_ratio = joint.zip(sequential).and_then(|((_, j), (_, s))| {
        let last_stage = s.stage_labels.len() - 1;
        let last = s.log.stage_wall_seconds(last_stage);
        (last > 0.0).then(|| j.log.total_wall_seconds() / last)
    });

    RunManifest {
        config_sha256,
        config_version: config.config_version,
        started_unix,
        finished_unix,
        strategies,
        sample_ratio,
        wall_ratio_joint_vs_last_finetune: wall_ratio,
        metrics: MetricConventions::default(),
        artifacts,
    }
}

impl RunManifest {
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| HarnessError::Runtime(format!("cannot serialize manifest: {e}")))?;
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| HarnessError::Runtime(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| HarnessError::Runtime(format!("malformed manifest {}: {e}", path.display())))
    }

    /// Confirms that every artifact the manifest lists is actually present.
    pub fn verify_artifacts(&self, dir: &Path) -> Result<()> {
        for name in &self.artifacts {
            if !dir.join(name).is_file() {
                return Err(HarnessError::Runtime(format!(
                    "manifest lists {name}, but it does not exist in {}",
                    dir.display()
                )));
            }
        }
        Ok(())
    }
}
