use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use driftbench_cli::error::HarnessError;
use driftbench_cli::{report, runner};
use driftbench_core::data::{cache, generate_synthetic_stream, StreamSpec};
use driftbench_core::model::checkpoint;
use driftbench_core::nn::LayerSpec;

#[derive(Parser)]
#[command(
    name = "driftbench",
    version,
    about = "Domain-incremental continual-learning benchmark"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment a config file describes.
    Run { config: PathBuf },
    /// Rebuild tables and the text report from a results directory.
    Report { results_dir: PathBuf },
    /// Generate a synthetic stream from a spec file and cache it.
    GenStream { spec: PathBuf, out: PathBuf },
    /// Summarize a checkpoint file.
    Inspect { checkpoint: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(command: Command) -> Result<(), HarnessError> {
    match command {
        Command::Run { config } => {
            let outcome = runner::run_experiment(&config)?;
            for s in &outcome.manifest.strategies {
                println!(
                    "{}: {} checkpoint(s), {} epochs, {} samples, {:.2}s",
                    s.strategy, s.checkpoints, s.epochs, s.total_samples, s.wall_seconds
                );
            }
            println!("results written to {}", outcome.out_dir.display());
            Ok(())
        }
        Command::Report { results_dir } => {
            let (artifacts, warnings) = report::emit_report(&results_dir)?;
            for w in &warnings {
                eprintln!("warning: {w}");
            }
            println!(
                "report rebuilt: {} file(s) in {}",
                artifacts.len(),
                results_dir.display()
            );
            Ok(())
        }
        Command::GenStream { spec, out } => gen_stream(&spec, &out),
        Command::Inspect { checkpoint } => inspect(&checkpoint),
    }
}

fn gen_stream(spec_path: &Path, out: &Path) -> Result<(), HarnessError> {
    let text = std::fs::read_to_string(spec_path).map_err(|e| {
        HarnessError::Config(format!("cannot read spec {}: {e}", spec_path.display()))
    })?;
    let spec: StreamSpec = toml::from_str(&text)
        .map_err(|e| HarnessError::Config(format!("spec parse error: {e}")))?;
    spec.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
    let stream = generate_synthetic_stream(&spec)?;
    cache::write_stream(&stream, spec.classes, out)?;
    let samples: usize = stream.iter().map(|e| e.train.len() + e.test.len()).sum();
    println!(
        "cached {} experience(s), {} classes, {} samples to {}",
        stream.len(),
        spec.classes,
        samples,
        out.display()
    );
    Ok(())
}

fn inspect(path: &Path) -> Result<(), HarnessError> {
    let net = checkpoint::load(path)?;
    println!("checkpoint {}", path.display());
    println!("  input shape: {}", dims(net.input_shape()));
    let body: Vec<String> = net.body().iter().map(layer_text).collect();
    println!("  body: {}", body.join(" -> "));
    println!("  embedding dim: {}", net.embedding_dim());
    println!("  classes: {}", net.num_classes());
    let entries = net.params().entries();
    let frozen = entries.iter().filter(|e| !e.trainable).count();
    println!(
        "  parameters: {} values in {} tensors ({} frozen)",
        net.params().num_values(),
        entries.len(),
        frozen
    );
    println!(
        "  head: {}",
        if net.head_is_frozen() { "frozen" } else { "trainable" }
    );
    Ok(())
}

fn dims(shape: &[usize]) -> String {
    shape
        .iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join("x")
}

fn layer_text(spec: &LayerSpec) -> String {
    match spec {
        LayerSpec::Dense { input, output } => format!("Dense({input}->{output})"),
        LayerSpec::Relu => "Relu".into(),
        LayerSpec::Conv2d {
            in_channels,
            out_channels,
            kernel,
            stride,
        } => format!("Conv2d({in_channels}->{out_channels}, k{kernel} s{stride})"),
        LayerSpec::MaxPool2x2 => "MaxPool2x2".into(),
        LayerSpec::Flatten => "Flatten".into(),
    }
}
