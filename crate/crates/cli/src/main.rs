//! `aqg`: ingest, index, generate, evaluate, check agreement and report.
//!
//! Exit status is 0 on success, 1 for usage or configuration errors, 2 for
//! data errors and 3 when the generation provider fails.

mod commands;
mod config;
mod error;
mod report_cmd;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::FileConfig;
use crate::error::CliResult;

#[derive(Debug, Parser)]
#[command(
    name = "aqg",
    version,
    about = "Question generation with few-shot, retrieval and hybrid prompting"
)]
struct Cli {
    /// `key = value` config file; flags take precedence over it
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// More log output (repeat for debug)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Dataset utilities
    #[command(subcommand)]
    Dataset(DatasetCommand),
    /// Build a BM25 index over a directory of .txt files
    Index(IndexArgs),
    /// Generate one question per test record
    Generate(Box<GenerateArgs>),
    /// Score a questions file against the gold questions
    Evaluate(EvaluateArgs),
    /// Fleiss's kappa per criterion for a ratings CSV
    Agreement(AgreementArgs),
    /// Comparison tables, significance and sample sheets
    Report(ReportArgs),
}

#[derive(Debug, Subcommand)]
enum DatasetCommand {
    /// Per-subject record counts
    Stats {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct IndexArgs {
    corpus_dir: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long)]
    test: Option<PathBuf>,
    /// baseline, icl, rag or hybrid
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    icl_shots: Option<usize>,
    /// Documents to retrieve for rag and hybrid
    #[arg(long)]
    retrieval_k: Option<usize>,
    /// Few-shot examples for hybrid
    #[arg(long)]
    hybrid_shots: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// stratified or similarity
    #[arg(long)]
    selection: Option<String>,
    /// Index file from `aqg index`
    #[arg(long)]
    index: Option<PathBuf>,
    /// Corpus directory, indexed on the fly when no index file is given
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Offline deterministic provider
    #[arg(long)]
    mock: bool,
    /// Chat-completions URL; the key is read from AQG_API_KEY
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Output name; defaults to one derived from the method settings
    #[arg(long)]
    label: Option<String>,
    #[arg(long)]
    template: Option<PathBuf>,
    #[arg(long)]
    token_budget: Option<usize>,
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long)]
    max_tokens: Option<u32>,
    #[arg(long)]
    max_in_flight: Option<usize>,
    #[arg(long)]
    failure_threshold: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    questions: PathBuf,
    #[arg(long)]
    test: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Output name; defaults to the questions file stem
    #[arg(long)]
    label: Option<String>,
}

#[derive(Debug, Args)]
pub struct AgreementArgs {
    ratings: Option<PathBuf>,
    /// Also write the kappa table as CSV
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Run label of a baseline; repeat for several
    #[arg(long = "baseline")]
    baselines: Vec<String>,
    /// Row order; defaults to baselines first, then the rest by name
    #[arg(long = "model")]
    models: Vec<String>,
    #[arg(long)]
    ratings: Option<PathBuf>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Records in the qualitative sample sheet (needs --test)
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    test: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

fn run(cli: Cli) -> CliResult<()> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    match cli.command {
        Command::Dataset(DatasetCommand::Stats { files }) => commands::dataset_stats(&files),
        Command::Index(args) => {
            let corpus = file.pick(args.corpus_dir, "corpus")?;
            commands::index(corpus, args.out)
        }
        Command::Generate(args) => commands::generate(&args, &file),
        Command::Evaluate(args) => commands::evaluate(&args, &file),
        Command::Agreement(args) => commands::agreement(&args, &file),
        Command::Report(args) => report_cmd::report(&args, &file),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.kind as u8)
        }
    }
}
