//! `memmeter`: measure machine memorability of images and analyse the scores.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use memmeter_core::Error;

use crate::config::{Overrides, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "memmeter", version, about = "Machine memorability of images")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Default, Args)]
struct Common {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset: a CIFAR binary batch (file or directory of .bin) or a PPM directory.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Parallel episodes (default: available cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Separate pool of never-seen images.
    #[arg(long)]
    unseen_data: Option<PathBuf>,
    /// PPM manifest with header `id,filename[,label]`.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the episodes and write per-image scores.
    Measure(Common),
    /// Compute the six image attributes for every image.
    Attributes(Common),
    /// Group, correlate and rank measured scores.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Score CSV from `measure`.
        #[arg(long)]
        scores: Option<PathBuf>,
        /// Attribute CSV from `attributes`.
        #[arg(long)]
        attributes: Option<PathBuf>,
        /// Extra `image_id,<col>…` CSV to correlate; repeatable.
        #[arg(long = "merge-csv")]
        merge_csv: Vec<PathBuf>,
    },
    /// Fit a score regressor on measured scores.
    TrainPredictor {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scores: Option<PathBuf>,
    },
    /// Predict scores with a trained regressor.
    Predict {
        #[command(flatten)]
        common: Common,
        /// Model file (default: <out>/predictor.mmt).
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Measure once per value of one knob and compare the runs.
    Sweep(Common),
}

impl Common {
    fn overrides(self) -> Overrides {
        Overrides {
            data: self.data,
            unseen_data: self.unseen_data,
            manifest: self.manifest,
            out: self.out,
            seed: self.seed,
            workers: self.workers,
            ..Default::default()
        }
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::Usage(_) | Error::Shape(_) => 2,
        Error::Data(_) | Error::Format { .. } | Error::Io(_) | Error::Csv(_) | Error::Json(_) => 3,
        Error::MeasurementFailure(_) | Error::Numeric(_) => 4,
    }
}

fn run(cli: Cli) -> memmeter_core::Result<()> {
    let (name, common, extra) = match cli.command {
        Command::Measure(c) => ("measure", c, Overrides::default()),
        Command::Attributes(c) => ("attributes", c, Overrides::default()),
        Command::Analyze {
            common,
            scores,
            attributes,
            merge_csv,
        } => (
            "analyze",
            common,
            Overrides {
                scores,
                attributes,
                merge_csv,
                ..Default::default()
            },
        ),
        Command::TrainPredictor { common, scores } => (
            "train-predictor",
            common,
            Overrides {
                scores,
                ..Default::default()
            },
        ),
        Command::Predict { common, model } => (
            "predict",
            common,
            Overrides {
                model,
                ..Default::default()
            },
        ),
        Command::Sweep(c) => ("sweep", c, Overrides::default()),
    };
    let file = common.config.clone();
    let mut flags = common.overrides();
    flags.scores = extra.scores;
    flags.attributes = extra.attributes;
    flags.merge_csv = extra.merge_csv;
    flags.model = extra.model;
    let cfg = RunConfig::resolve(file.as_deref(), flags)?;
    match name {
        "measure" => commands::measure(&cfg),
        "attributes" => commands::attributes(&cfg),
        "analyze" => commands::analyze(&cfg),
        "train-predictor" => commands::train_predictor(&cfg),
        "predict" => commands::predict(&cfg),
        _ => commands::sweep(&cfg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MEMMETER_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("memmeter: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_by_category() {
        assert_eq!(exit_code(&Error::Config("x".into())), 2);
        assert_eq!(exit_code(&Error::Usage("x".into())), 2);
        assert_eq!(exit_code(&Error::Data("x".into())), 3);
        assert_eq!(exit_code(&Error::Io(std::io::Error::other("x"))), 3);
        assert_eq!(exit_code(&Error::MeasurementFailure("x".into())), 4);
        assert_eq!(exit_code(&Error::Numeric("x".into())), 4);
    }

    #[test]
    fn cli_parses() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
        let cli = Cli::try_parse_from([
            "memmeter", "analyze", "--scores", "s.csv", "--merge-csv", "a.csv", "--merge-csv", "b.csv",
        ])
        .unwrap();
        match cli.command {
            Command::Analyze { merge_csv, .. } => assert_eq!(merge_csv.len(), 2),
            other => panic!("{other:?}"),
        }
    }
}
