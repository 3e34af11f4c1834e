//! `notewatch`: one subcommand per pipeline stage. Failures print a single
//! JSON object (`{"error", "stage", "message"}`) on stderr and exit with 1.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::config::PipelineConfig;

#[derive(Debug, Serialize)]
pub struct Failure {
    error: String,
    stage: String,
    message: String,
}

impl Failure {
    pub fn new(error: &str, message: impl Into<String>) -> Self {
        Failure {
            error: error.into(),
            stage: String::new(),
            message: message.into(),
        }
    }
}

impl From<notewatch::Error> for Failure {
    fn from(e: notewatch::Error) -> Self {
        Failure::new(e.kind(), e.to_string())
    }
}

#[derive(Parser)]
#[command(name = "notewatch", version, about = "Weak labeling and classification of clinical notes")]
struct Cli {
    /// Pipeline configuration (TOML). Flags override its values.
    #[arg(long, global = true, env = "NOTEWATCH_CONFIG")]
    config: Option<PathBuf>,

    /// Lexicon directory, overriding `lexicon.dir`.
    #[arg(long, global = true)]
    lexicon: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a JSONL or CSV export and rewrite it as JSONL notes.
    Ingest(commands::IngestArgs),
    /// Generate a synthetic labeled corpus.
    GenSynth(commands::GenSynthArgs),
    /// Train CBOW embeddings and write them as TSV.
    TrainEmbeddings(commands::TrainEmbeddingsArgs),
    /// Propose lexicon additions from embedding neighbours.
    ExpandLexicon(commands::ExpandArgs),
    /// Apply reviewed candidates and write the extended lexicon.
    ReviewLexicon(commands::ReviewArgs),
    /// Label notes with the rule-based asserter.
    WeakLabel(commands::WeakLabelArgs),
    /// Split labeled notes, train the SVM and save the model.
    Train(commands::TrainArgs),
    /// Score a labeled test set and write a report.
    Evaluate(commands::EvaluateArgs),
    /// Stream notes through a model and write one prediction per note.
    Classify(commands::ClassifyArgs),
}

impl Command {
    fn stage(&self) -> &'static str {
        match self {
            Command::Ingest(_) => "ingest",
            Command::GenSynth(_) => "gen-synth",
            Command::TrainEmbeddings(_) => "train-embeddings",
            Command::ExpandLexicon(_) => "expand-lexicon",
            Command::ReviewLexicon(_) => "review-lexicon",
            Command::WeakLabel(_) => "weak-label",
            Command::Train(_) => "train",
            Command::Evaluate(_) => "evaluate",
            Command::Classify(_) => "classify",
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut config = PipelineConfig::load(cli.config.as_deref())?;
    if let Some(dir) = cli.lexicon {
        config.lexicon.dir = Some(dir);
    }
    match cli.command {
        Command::Ingest(a) => commands::ingest(a),
        Command::GenSynth(a) => commands::gen_synth(a, config),
        Command::TrainEmbeddings(a) => commands::train_embeddings(a, config),
        Command::ExpandLexicon(a) => commands::expand_lexicon(a, config),
        Command::ReviewLexicon(a) => commands::review_lexicon(a, config),
        Command::WeakLabel(a) => commands::weak_label(a, config),
        Command::Train(a) => commands::train(a, config),
        Command::Evaluate(a) => commands::evaluate(a, config),
        Command::Classify(a) => commands::classify(a, config),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stage = cli.command.stage();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(mut f) => {
            f.stage = stage.into();
            eprintln!("{}", serde_json::to_string(&f).expect("failures serialize"));
            ExitCode::FAILURE
        }
    }
}
