//! Loads a config, runs the requested strategies, and writes every
//! artifact: checkpoints, results files, report files, and the manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use sha2::{Digest, Sha256};

use driftbench_core::data::cache as stream_cache;
use driftbench_core::data::folder::load_folder_dataset;
use driftbench_core::data::synthetic::default_benchmark;
use driftbench_core::data::{generate_synthetic_stream, Experience, CLASS_NAMES};
use driftbench_core::model::checkpoint;
use driftbench_core::strategies::{run_protocol, ProtocolResult, StrategyKind};

use crate::config::{ExperimentConfig, StreamSection};
use crate::error::{HarnessError, Result};
use crate::manifest::{self, RunManifest};
use crate::record::StrategyRecord;
use crate::report;

/// When set and non-empty, relative `output_dir` values resolve under this
/// root instead of the working directory.
pub const ENV_OUT_ROOT: &str = "DRIFTBENCH_OUT_ROOT";

pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub manifest: RunManifest,
}

pub fn run_experiment(config_path: &Path) -> Result<RunOutcome> {
    let bytes = fs::read(config_path).map_err(|e| {
        HarnessError::Config(format!("cannot read config {}: {e}", config_path.display()))
    })?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| HarnessError::Config("config file is not valid UTF-8".into()))?;
    let config = ExperimentConfig::parse(&text)?;
    let config_sha256 = hex_sha256(&bytes);

    let out_dir = resolve_out_dir(&config.output_dir);
    fs::create_dir_all(&out_dir).map_err(|e| {
        HarnessError::Runtime(format!("cannot create {}: {e}", out_dir.display()))
    })?;

    let started_unix = unix_now();
    let (stream, num_classes) = load_stream(&config.stream)?;
    let results = run_strategies(&config, num_classes, stream)?;

    let mut artifacts = Vec::new();
    let mut records = Vec::new();
    for (kind, result) in &results {
        for (i, net) in result.stage_nets.iter().enumerate() {
            let name = format!("ckpt_{}_stage{i}.clnet", kind.name());
            checkpoint::save(net, &out_dir.join(&name))?;
            artifacts.push(name);
        }
        let record = StrategyRecord::from_result(result);
        let name = StrategyRecord::file_name(*kind);
        record.save(&out_dir.join(&name))?;
        artifacts.push(name);
        records.push(record);
    }
    let (report_files, _) = report::write_report(&out_dir, &records, &config.strategies)?;
    artifacts.extend(report_files);

    let finished_unix = unix_now();
    let manifest = manifest::build(
        &config,
        config_sha256,
        started_unix,
        finished_unix,
        &results,
        artifacts,
    );
    manifest.verify_artifacts(&out_dir)?;
    manifest.save(&out_dir.join("manifest.json"))?;
    Ok(RunOutcome { out_dir, manifest })
}

/// Builds the experience stream a config calls for, returning it along
/// with the class count.
pub fn load_stream(section: &StreamSection) -> Result<(Vec<Experience>, usize)> {
    if let Some(benchmark) = &section.benchmark {
        let spec = default_benchmark(benchmark.seed);
        let stream = generate_synthetic_stream(&spec)?;
        return Ok((stream, spec.classes));
    }
    if let Some(spec) = &section.synthetic {
        let stream = generate_synthetic_stream(spec)?;
        return Ok((stream, spec.classes));
    }
    if let Some(folders) = &section.folders {
        let mut stream = Vec::with_capacity(folders.experiences.len());
        for (id, exp) in folders.experiences.iter().enumerate() {
            stream.push(load_folder_dataset(
                &exp.path,
                &exp.name,
                id,
                folders.test_fraction,
                folders.split_seed,
            )?);
        }
        return Ok((stream, CLASS_NAMES.len()));
    }
    if let Some(cache) = &section.cache {
        let (stream, classes) = stream_cache::read_stream(&cache.path)?;
        return Ok((stream, classes));
    }
    Err(HarnessError::Config("no stream source configured".into()))
}

/// Runs every configured strategy, sequentially by default or on one
/// thread per strategy when `parallel_strategies` is set. Each strategy
/// consumes its own copy of the stream, so outputs match exactly.
fn run_strategies(
    config: &ExperimentConfig,
    num_classes: usize,
    stream: Vec<Experience>,
) -> Result<Vec<(StrategyKind, ProtocolResult)>> {
    let arch = config.arch.build()?;
    if config.parallel_strategies && config.strategies.len() > 1 {
        std::thread::scope(|scope| {
            let handles: Vec<_> = config
                .strategies
                .iter()
                .map(|&kind| {
                    let stream = stream.clone();
                    let arch = &arch;
                    scope.spawn(move || {
                        run_protocol(
                            kind,
                            stream,
                            arch,
                            num_classes,
                            &config.hyperparams,
                            &config.lfl,
                            config.eval_cadence,
                        )
                    })
                })
                .collect();
            let mut results = Vec::with_capacity(handles.len());
            for (&kind, handle) in config.strategies.iter().zip(handles) {
                let result = handle
                    .join()
                    .map_err(|_| HarnessError::Runtime(format!("{kind} run panicked")))??;
                results.push((kind, result));
            }
            Ok(results)
        })
    } else {
        let mut results = Vec::with_capacity(config.strategies.len());
        for &kind in &config.strategies {
            let result = run_protocol(
                kind,
                stream.clone(),
                &arch,
                num_classes,
                &config.hyperparams,
                &config.lfl,
                config.eval_cadence,
            )?;
            results.push((kind, result));
        }
        Ok(results)
    }
}

pub fn resolve_out_dir(output_dir: &Path) -> PathBuf {
    match std::env::var_os(ENV_OUT_ROOT) {
        Some(root) if !root.is_empty() => PathBuf::from(root).join(output_dir),
        _ => output_dir.to_path_buf(),
    }
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn hex_sha256(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
