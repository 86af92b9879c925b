//! Sentiment pipeline for code-mixed vaccine discourse: fetch comments,
//! weakly annotate them with a polarity lexicon, vectorize, train and
//! compare classical classifiers, and emit report tables and charts.

mod config;
mod pipeline;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::Overrides;
use pipeline::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "vaxsent",
    version,
    about = "Lexicon-annotated sentiment classification over Reddit comments"
)]
struct Cli {
    /// Configuration file.
    #[arg(long, global = true, default_value = "config.toml")]
    config: PathBuf,
    /// Master RNG seed (overrides the config file).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory (overrides the config file).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Cross-validation fold count (overrides the config file).
    #[arg(long, global = true)]
    k: Option<usize>,
    /// Ranked terms kept in the term-frequency report (overrides the
    /// config file).
    #[arg(long, global = true)]
    top_n: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fetch matching comments from the live API into the corpus file.
    Fetch,
    /// Score, label, and persist the corpus; write descriptive reports.
    Annotate,
    /// Train every grid model on the full annotated corpus and save them.
    Train,
    /// Train/test-split the annotated corpus and write the model
    /// comparison table.
    Evaluate,
    /// Cross-validate the configured model selections.
    Cv,
    /// Re-render every report from previously computed artifacts.
    Report,
    /// The whole pipeline: annotate, evaluate, cross-validate, train,
    /// report.
    RunAll,
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Config(
                "flag --jobs: must be at least 1".to_string(),
            ));
        }
        // Fails harmlessly if a pool already exists (e.g. under tests).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }

    let overrides = Overrides {
        seed: cli.seed,
        out: cli.out,
        k: cli.k,
        top_n: cli.top_n,
    };
    let cfg = config::load_config(&cli.config, &overrides)
        .map_err(|e| CliError::Config(e.to_string()))?;
    log::info!("effective config: {cfg:?}");
    log::info!("seed: {}", cfg.seed);

    match cli.command {
        Command::Fetch => pipeline::cmd_fetch(&cfg),
        Command::Annotate => pipeline::cmd_annotate(&cfg),
        Command::Train => pipeline::cmd_train(&cfg),
        Command::Evaluate => pipeline::cmd_evaluate(&cfg),
        Command::Cv => pipeline::cmd_cv(&cfg),
        Command::Report => pipeline::cmd_report(&cfg),
        Command::RunAll => pipeline::cmd_run_all(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(message)) => {
            eprintln!("configuration error: {message}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}
