use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use minority_harness::{Experiment, ExperimentConfig, HarnessError, Stage};

#[derive(Parser)]
#[command(name = "minority", version, about = "Minority score and minority guidance experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw the training and reference datasets.
    Synth(Common),
    /// Train the noise-prediction network.
    TrainScore(Common),
    /// Compute minority scores of the training set.
    ScoreMinority(Common),
    /// Split minority scores into ordinal classes.
    Bin(Common),
    /// Train the noise-conditioned minority classifier.
    TrainClassifier(Common),
    /// Draw guided and unguided batches.
    Sample(Common),
    /// Score generated batches against the reference set.
    Evaluate(Common),
    /// Run every stage in order.
    Pipeline(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Artifact directory; defaults to the config's output_dir.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    let (common, stage) = match cli.command {
        Command::Synth(c) => (c, Some(Stage::Synth)),
        Command::TrainScore(c) => (c, Some(Stage::TrainScore)),
        Command::ScoreMinority(c) => (c, Some(Stage::ScoreMinority)),
        Command::Bin(c) => (c, Some(Stage::Bin)),
        Command::TrainClassifier(c) => (c, Some(Stage::TrainClassifier)),
        Command::Sample(c) => (c, Some(Stage::Sample)),
        Command::Evaluate(c) => (c, Some(Stage::Evaluate)),
        Command::Pipeline(c) => (c, None),
    };
    let mut config = ExperimentConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    let out = common.out.unwrap_or_else(|| config.output_dir.clone());
    match stage {
        Some(stage) => Experiment::new(config, out)?.run_stage(stage),
        None => minority_harness::run_pipeline(config, out).map(|_| ()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

