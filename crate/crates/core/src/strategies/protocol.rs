//! End-to-end protocol runs over an experience stream.

use crate::data::{Experience, Sample};
use crate::error::{Error, Result};
use crate::metrics::{eval_cell, evaluate_checkpoint, EvalMatrix, TrendPoint};
use crate::model::{build_model, ArchConfig, LayeredNet};
use crate::seed::derive_seed;
use crate::strategies::train::{train_stage, TrainLog};
use crate::strategies::{Hyperparams, LflConfig, StrategyKind};

/// Everything one protocol run produces.
#[derive(Debug, Clone)]
pub struct ProtocolResult {
    pub strategy: StrategyKind,
    /// One label per emitted checkpoint, e.g. "after dom0->dom1" or "joint".
    pub stage_labels: Vec<String>,
    /// Network state at each checkpoint, aligned with `stage_labels`.
    pub stage_nets: Vec<LayeredNet>,
    /// One row per checkpoint, every test set evaluated.
    pub matrix: EvalMatrix,
    /// Union-test series sampled at the evaluation cadence.
    pub trend: Vec<TrendPoint>,
    pub log: TrainLog,
}

/// Trains `strategy` over the stream from a fresh network.
///
/// Sequential strategies (naive, lfl) train the experiences in order and
/// emit a checkpoint and evaluation row after each one; LFL trains the
/// first experience plainly and intervenes from the second on. Joint trains
/// once on the union of every train split and emits a single row.
///
/// The stream is consumed: sequential runs free each train split when its
/// stage ends, so no later stage can reach earlier training data.
pub fn run_protocol(
    strategy: StrategyKind,
    stream: Vec<Experience>,
    arch: &ArchConfig,
    num_classes: usize,
    hp: &Hyperparams,
    lfl: &LflConfig,
    eval_cadence: usize,
) -> Result<ProtocolResult> {
    hp.validate()?;
    validate_cadence(eval_cadence)?;
    validate_stream(&stream, &arch.input_shape, num_classes)?;
    let net = build_model(arch, num_classes, derive_seed(hp.seed, "init"))?;
    match strategy {
        StrategyKind::Joint => run_joint(net, stream, hp, eval_cadence),
        StrategyKind::Naive | StrategyKind::Lfl => {
            run_sequential(strategy, net, 0, stream, hp, lfl, eval_cadence)
        }
    }
}

/// Continues a sequential run from a checkpoint, training stages
/// `start_stage..` with the same seeds an uninterrupted run would use.
/// The result covers only the resumed stages.
pub fn resume_protocol(
    strategy: StrategyKind,
    net: LayeredNet,
    start_stage: usize,
    stream: Vec<Experience>,
    hp: &Hyperparams,
    lfl: &LflConfig,
    eval_cadence: usize,
) -> Result<ProtocolResult> {
    if strategy == StrategyKind::Joint {
        return Err(Error::Config(
            "joint training is a single stage; resuming applies to sequential strategies".into(),
        ));
    }
    hp.validate()?;
    validate_cadence(eval_cadence)?;
    validate_stream(&stream, net.input_shape(), net.num_classes())?;
    if start_stage == 0 || start_stage >= stream.len() {
        return Err(Error::Config(format!(
            "resume stage must be in 1..{}, got {start_stage}",
            stream.len()
        )));
    }
    run_sequential(strategy, net, start_stage, stream, hp, lfl, eval_cadence)
}

fn validate_cadence(eval_cadence: usize) -> Result<()> {
    if eval_cadence == 0 {
        return Err(Error::Config("eval_cadence must be at least 1".into()));
    }
    Ok(())
}

fn validate_stream(stream: &[Experience], input_shape: &[usize], num_classes: usize) -> Result<()> {
    if stream.is_empty() {
        return Err(Error::Input("experience stream is empty".into()));
    }
    for exp in stream {
        for (split_name, split) in [("train", &exp.train), ("test", &exp.test)] {
            if split.is_empty() {
                return Err(Error::Input(format!(
                    "experience \"{}\" has an empty {split_name} split",
                    exp.name
                )));
            }
            for sample in split.iter() {
                if sample.x.shape() != input_shape {
                    return Err(Error::Input(format!(
                        "experience \"{}\" has a sample of shape {:?}, expected {:?}",
                        exp.name,
                        sample.x.shape(),
                        input_shape
                    )));
                }
                if sample.label >= num_classes {
                    return Err(Error::Input(format!(
                        "experience \"{}\" has label {} out of range for {} classes",
                        exp.name, sample.label, num_classes
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Splits the owned stream into names, train splits, and test splits.
fn dismantle(stream: Vec<Experience>) -> (Vec<String>, Vec<Vec<Sample>>, Vec<Vec<Sample>>) {
    let mut names = Vec::with_capacity(stream.len());
    let mut trains = Vec::with_capacity(stream.len());
    let mut tests = Vec::with_capacity(stream.len());
    for exp in stream {
        names.push(exp.name);
        trains.push(exp.train);
        tests.push(exp.test);
    }
    (names, trains, tests)
}

fn run_sequential(
    strategy: StrategyKind,
    mut net: LayeredNet,
    start_stage: usize,
    stream: Vec<Experience>,
    hp: &Hyperparams,
    lfl: &LflConfig,
    eval_cadence: usize,
) -> Result<ProtocolResult> {
    let stages = stream.len();
    let (names, mut trains, tests) = dismantle(stream);
    // Sequential training never looks back at earlier training data: splits
    // below the starting stage are freed here, and each remaining split is
    // surrendered to the stage that consumes it and freed before the next
    // stage begins. Test splits stay, evaluation needs them after every stage.
    for past in &mut trains[..start_stage] {
        *past = Vec::new();
    }
    let union_test: Vec<Sample> = tests.iter().flatten().cloned().collect();
    let test_sets: Vec<&[Sample]> = tests.iter().map(|t| t.as_slice()).collect();
    let mut matrix = EvalMatrix::new(names.clone());
    let mut trend: Vec<TrendPoint> = Vec::new();
    let mut log = TrainLog::default();
    let mut stage_labels = Vec::new();
    let mut stage_nets = Vec::new();

    for stage in start_stage..stages {
        let train = std::mem::take(&mut trains[stage]);
        let snapshot = if strategy == StrategyKind::Lfl && stage > 0 {
            let snap = net.snapshot();
            if lfl.freeze_head {
                net.freeze_head();
            }
            Some(snap)
        } else {
            None
        };
        let mut boundary_pending = stage > 0;
        let mut per_epoch = |net: &LayeredNet, global: usize, local: usize| -> Result<()> {
            if (local + 1) % eval_cadence != 0 {
                return Ok(());
            }
            let cell = eval_cell(net, &union_test)?;
            trend.push(TrendPoint {
                epoch: global,
                auroc: cell.auroc,
                f1: cell.f1,
                experience_boundary: std::mem::take(&mut boundary_pending),
            });
            Ok(())
        };
        train_stage(
            &mut net,
            &train,
            stage,
            hp,
            snapshot.as_ref(),
            lfl.embedding_norm,
            stage * hp.epochs_per_experience,
            &mut log,
            &mut per_epoch,
        )?;
        drop(train);
        let label = format!("after {}", names[..=stage].join("->"));
        matrix.push_row(evaluate_checkpoint(&net, &label, &test_sets)?)?;
        stage_labels.push(label);
        stage_nets.push(net.clone());
    }
    Ok(ProtocolResult {
        strategy,
        stage_labels,
        stage_nets,
        matrix,
        trend,
        log,
    })
}

fn run_joint(
    mut net: LayeredNet,
    stream: Vec<Experience>,
    hp: &Hyperparams,
    eval_cadence: usize,
) -> Result<ProtocolResult> {
    let (names, trains, tests) = dismantle(stream);
    let union_train: Vec<Sample> = trains.into_iter().flatten().collect();
    let union_test: Vec<Sample> = tests.iter().flatten().cloned().collect();
    let test_sets: Vec<&[Sample]> = tests.iter().map(|t| t.as_slice()).collect();
    let mut matrix = EvalMatrix::new(names);
    let mut trend: Vec<TrendPoint> = Vec::new();
    let mut log = TrainLog::default();

    let mut per_epoch = |net: &LayeredNet, global: usize, local: usize| -> Result<()> {
        if (local + 1) % eval_cadence != 0 {
            return Ok(());
        }
        let cell = eval_cell(net, &union_test)?;
        trend.push(TrendPoint {
            epoch: global,
            auroc: cell.auroc,
            f1: cell.f1,
            experience_boundary: false,
        });
        Ok(())
    };
    train_stage(
        &mut net,
        &union_train,
        0,
        hp,
        None,
        crate::strategies::EmbeddingNorm::Squared,
        0,
        &mut log,
        &mut per_epoch,
    )?;
    let label = "joint".to_string();
    matrix.push_row(evaluate_checkpoint(&net, &label, &test_sets)?)?;
    Ok(ProtocolResult {
        strategy: StrategyKind::Joint,
        stage_labels: vec![label],
        stage_nets: vec![net],
        matrix,
        trend,
        log,
    })
}
