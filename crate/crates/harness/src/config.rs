//! Experiment configuration: one TOML file, versioned, strict about keys.
//!
//! Unknown keys anywhere in the tree are errors, not warnings, so a typoed
//! hyperparameter cannot silently fall back to its default.

use std::path::PathBuf;

use serde::Deserialize;

use driftbench_core::data::{StreamSpec, CLASS_NAMES};
use driftbench_core::model::ArchConfig;
use driftbench_core::strategies::{Hyperparams, LflConfig, StrategyKind};

use crate::error::{HarnessError, Result};

/// The one schema version this build reads.
pub const CONFIG_VERSION: u32 = 1;

fn bad(message: impl Into<String>) -> HarnessError {
    HarnessError::Config(message.into())
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub config_version: u32,
    /// Strategies to run, in order. Defaults to all three.
    #[serde(default = "defaults::strategies")]
    pub strategies: Vec<StrategyKind>,
    /// Artifact directory; resolved under `DRIFTBENCH_OUT_ROOT` when that
    /// variable is set (an absolute path here wins over the variable).
    pub output_dir: PathBuf,
    /// Union-test trend sampling interval, in epochs.
    #[serde(default = "defaults::eval_cadence")]
    pub eval_cadence: usize,
    /// Run the strategies on separate threads. Outputs are identical either
    /// way; only wall time changes.
    #[serde(default)]
    pub parallel_strategies: bool,
    pub arch: ArchSection,
    #[serde(default)]
    pub hyperparams: Hyperparams,
    #[serde(default)]
    pub lfl: LflConfig,
    pub stream: StreamSection,
}

mod defaults {
    use driftbench_core::strategies::StrategyKind;

    pub fn strategies() -> Vec<StrategyKind> {
        vec![StrategyKind::Naive, StrategyKind::Lfl, StrategyKind::Joint]
    }

    pub fn eval_cadence() -> usize {
        1
    }
}

impl ExperimentConfig {
    /// Parses and validates a config file's text.
    pub fn parse(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| bad(format!("config parse error: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.config_version != CONFIG_VERSION {
            return Err(bad(format!(
                "config_version {} is not supported; this build reads version {CONFIG_VERSION}",
                self.config_version
            )));
        }
        if self.strategies.is_empty() {
            return Err(bad("strategies must name at least one strategy"));
        }
        for (i, s) in self.strategies.iter().enumerate() {
            if self.strategies[..i].contains(s) {
                return Err(bad(format!("strategy \"{s}\" is listed more than once")));
            }
        }
        if self.output_dir.as_os_str().is_empty() {
            return Err(bad("output_dir must not be empty"));
        }
        if self.eval_cadence == 0 {
            return Err(bad("eval_cadence must be at least 1"));
        }
        self.arch.build()?;
        self.hyperparams.validate().map_err(|e| bad(e.to_string()))?;
        self.stream.validate()?;
        Ok(())
    }
}

/// Network architecture. `kind = "mlp"` takes `input_dim`, `hidden`, and
/// `embedding_dim`; `kind = "cnn32"` is fixed for 1x32x32 grayscale input
/// and takes no further fields.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchSection {
    pub kind: String,
    #[serde(default)]
    pub input_dim: Option<usize>,
    #[serde(default)]
    pub hidden: Option<Vec<usize>>,
    #[serde(default)]
    pub embedding_dim: Option<usize>,
}

impl ArchSection {
    pub fn build(&self) -> Result<ArchConfig> {
        match self.kind.as_str() {
            "mlp" => {
                let input_dim = self
                    .input_dim
                    .ok_or_else(|| bad("arch.input_dim is required for kind = \"mlp\""))?;
                let hidden = self
                    .hidden
                    .clone()
                    .ok_or_else(|| bad("arch.hidden is required for kind = \"mlp\""))?;
                let embedding_dim = self
                    .embedding_dim
                    .ok_or_else(|| bad("arch.embedding_dim is required for kind = \"mlp\""))?;
                if input_dim == 0 || embedding_dim == 0 || hidden.contains(&0) {
                    return Err(bad("arch widths must be positive"));
                }
                Ok(ArchConfig::mlp(input_dim, &hidden, embedding_dim))
            }
            "cnn32" => {
                let strays = [
                    ("input_dim", self.input_dim.is_some()),
                    ("hidden", self.hidden.is_some()),
                    ("embedding_dim", self.embedding_dim.is_some()),
                ];
                if let Some((name, _)) = strays.iter().find(|(_, set)| *set) {
                    return Err(bad(format!(
                        "arch.{name} does not apply to kind = \"cnn32\""
                    )));
                }
                Ok(ArchConfig::cnn32())
            }
            other => Err(bad(format!(
                "unknown arch kind \"{other}\"; expected \"mlp\" or \"cnn32\""
            ))),
        }
    }
}

/// Exactly one stream source must be configured.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreamSection {
    /// The pinned 3-domain benchmark stream; only the seed is open.
    #[serde(default)]
    pub benchmark: Option<BenchmarkSection>,
    /// Generated stream, described inline.
    #[serde(default)]
    pub synthetic: Option<StreamSpec>,
    /// Class-folder or CSV datasets on disk, one per experience.
    #[serde(default)]
    pub folders: Option<FoldersSection>,
    /// A stream cache file written earlier (e.g. by `gen-stream`).
    #[serde(default)]
    pub cache: Option<CacheSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkSection {
    pub seed: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FoldersSection {
    /// Fraction of each class held out for testing, in (0, 1).
    pub test_fraction: f64,
    /// Seed of the stratified train/test splits.
    #[serde(default)]
    pub split_seed: u64,
    pub experiences: Vec<FolderExperience>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FolderExperience {
    pub name: String,
    pub path: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CacheSection {
    pub path: PathBuf,
}

impl StreamSection {
    pub fn validate(&self) -> Result<()> {
        let sources = self.benchmark.is_some() as u8
            + self.synthetic.is_some() as u8
            + self.folders.is_some() as u8
            + self.cache.is_some() as u8;
        if sources != 1 {
            return Err(bad(
                "exactly one of stream.benchmark, stream.synthetic, stream.folders, \
                 or stream.cache is required",
            ));
        }
        if let Some(spec) = &self.synthetic {
            spec.validate().map_err(|e| bad(e.to_string()))?;
        }
        if let Some(folders) = &self.folders {
            if folders.experiences.is_empty() {
                return Err(bad("stream.folders.experiences must not be empty"));
            }
            if !(folders.test_fraction > 0.0 && folders.test_fraction < 1.0) {
                return Err(bad(format!(
                    "stream.folders.test_fraction must be in (0, 1), got {}",
                    folders.test_fraction
                )));
            }
            for (i, exp) in folders.experiences.iter().enumerate() {
                if exp.name.is_empty() {
                    return Err(bad(format!("stream.folders.experiences[{i}].name is empty")));
                }
                if folders.experiences[..i].iter().any(|e| e.name == exp.name) {
                    return Err(bad(format!(
                        "experience name \"{}\" is used more than once",
                        exp.name
                    )));
                }
            }
        }
        Ok(())
    }

    /// Class count when the source states it up front; a cache file carries
    /// its own count and reveals it at load time.
    pub fn num_classes_hint(&self) -> Option<usize> {
        if let Some(spec) = &self.synthetic {
            return Some(spec.classes);
        }
        if self.benchmark.is_some() || self.folders.is_some() {
            return Some(CLASS_NAMES.len());
        }
        None
    }
}
