//! `cnets`: train, predict, evaluate, and inspect confidence-net models.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use confidence_nets::{Error, ErrorCategory, RunConfig};

#[derive(Parser)]
#[command(name = "cnets", version, about = "Prediction intervals for tabular regression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model on the training side of a seeded split and write it
    /// to a model file.
    Train(ConfigArgs),
    /// Predict intervals for every row of a CSV using a trained model.
    Predict(PredictArgs),
    /// Run the (fraction, seed) experiment grid and write summary and
    /// per-sample CSVs.
    Evaluate(EvaluateArgs),
    /// Print the contents of a model file.
    Inspect(InspectArgs),
}

/// Configuration layering: defaults, then `--config` file, then flags.
#[derive(Args, Default)]
struct ConfigArgs {
    /// Plain-text key=value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset manifest, or a bare CSV when --target is given.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Target column name; treats --dataset as a raw CSV.
    #[arg(long)]
    target: Option<String>,
    /// Training fraction of the seeded split.
    #[arg(long)]
    fraction: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Min-max normalize the target column (true) or leave it raw (false).
    #[arg(long)]
    normalize_target: Option<bool>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    huber_delta: Option<f64>,
    #[arg(long)]
    conv_channels: Option<usize>,
    #[arg(long)]
    kernel_size: Option<usize>,
    #[arg(long)]
    n_trees: Option<usize>,
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long)]
    shrinkage: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    min_samples_leaf: Option<usize>,
    #[arg(long)]
    memory_fraction: Option<f64>,
    /// Output directory for models and evaluation CSVs.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ConfigArgs {
    fn build(&self) -> Result<RunConfig, Error> {
        let mut config = RunConfig::default();
        if let Some(path) = &self.config {
            config.apply_file(path)?;
        }
        if let Some(v) = &self.dataset {
            config.dataset = v.clone();
        }
        if let Some(v) = self.fraction {
            config.train_fraction = v;
        }
        if let Some(v) = self.seed {
            config.seed = v;
        }
        if let Some(v) = self.normalize_target {
            config.normalize_target = v;
        }
        if let Some(v) = self.epochs {
            config.ensemble.net.epochs = v;
        }
        if let Some(v) = self.batch_size {
            config.ensemble.net.batch_size = v;
        }
        if let Some(v) = self.learning_rate {
            config.ensemble.net.learning_rate = v;
        }
        if let Some(v) = self.huber_delta {
            config.ensemble.net.huber_delta = v;
        }
        if let Some(v) = self.conv_channels {
            config.ensemble.net.conv_channels = v;
        }
        if let Some(v) = self.kernel_size {
            config.ensemble.net.kernel_size = v;
        }
        if let Some(v) = self.n_trees {
            config.ensemble.forest.n_trees = v;
        }
        if let Some(v) = self.max_depth {
            config.ensemble.forest.max_depth = v;
        }
        if let Some(v) = self.shrinkage {
            config.ensemble.forest.shrinkage = v;
        }
        if let Some(v) = self.lambda {
            config.ensemble.forest.lambda = v;
        }
        if let Some(v) = self.min_samples_leaf {
            config.ensemble.forest.min_samples_leaf = v;
        }
        if let Some(v) = self.memory_fraction {
            config.ensemble.memory_fraction = v;
        }
        if let Some(v) = &self.out {
            config.out_dir = v.clone();
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Args)]
struct PredictArgs {
    /// Trained model file.
    #[arg(long)]
    model: PathBuf,
    /// Input CSV; must contain every feature column the model was trained
    /// on (extra columns are ignored).
    #[arg(long)]
    input: PathBuf,
    /// Output CSV path; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Comma-separated training fractions, e.g. 0.9,0.55.
    #[arg(long, default_value = "0.9,0.55")]
    fractions: String,
    /// Comma-separated seeds, e.g. 1,2,3.
    #[arg(long, default_value = "1,2,3,4,5")]
    seeds: String,
}

#[derive(Args)]
struct InspectArgs {
    /// Model file to describe.
    #[arg(long)]
    model: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version are not errors.
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };

    let result = match &cli.command {
        Command::Train(args) => commands::train(args),
        Command::Predict(args) => commands::predict(args),
        Command::Evaluate(args) => commands::evaluate(args),
        Command::Inspect(args) => commands::inspect(args),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            let code = match err.category() {
                ErrorCategory::Usage => 1,
                ErrorCategory::Data => 2,
                ErrorCategory::Numeric => 3,
            };
            ExitCode::from(code)
        }
    }
}
