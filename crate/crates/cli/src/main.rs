//! `sellrank` — rank C2C marketplaces for selling an item, end to end:
//! ingest posts, train a topic model, inspect topics, train the vote forest,
//! recommend websites, and run NDPM sweep experiments.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use config::EngineConfig;

/// Input/usage problems exit with 2, missing trained artifacts with 3.
#[derive(Debug)]
pub enum CliError {
    Input(String),
    MissingArtifact(String),
    Other(anyhow::Error),
}

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }

    pub fn missing(msg: impl Into<String>) -> Self {
        CliError::MissingArtifact(msg.into())
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::MissingArtifact(_) => 3,
            CliError::Other(_) => 1,
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Input(msg) => format!("input error: {msg}"),
            CliError::MissingArtifact(msg) => format!("missing artifact: {msg}"),
            CliError::Other(err) => format!("error: {err:#}"),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(err: anyhow::Error) -> Self {
        CliError::Other(err)
    }
}

impl From<sellrank::Error> for CliError {
    fn from(err: sellrank::Error) -> Self {
        CliError::Other(anyhow::Error::new(err))
    }
}

#[derive(Parser)]
#[command(
    name = "sellrank",
    version,
    about = "Marketplace website ranking engine"
)]
struct Cli {
    /// Key = value config file; flags override individual keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Emit machine-readable JSON instead of tables.
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Nmf,
    Lda,
}

#[derive(Clone, Copy, ValueEnum)]
enum RecommendMode {
    Quantity,
    AvgPrice,
    Votes,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepArg {
    Topics,
    Trees,
}

#[derive(Clone, Copy, ValueEnum)]
enum EvalKindArg {
    Nmf,
    Lda,
    Bow,
}

#[derive(Clone, Copy, ValueEnum)]
enum CriterionArg {
    Quantity,
    AvgPrice,
}

#[derive(Subcommand)]
enum Command {
    /// Ingest a JSONL document file into the store snapshot.
    Ingest {
        /// One JSON object per line: website, description, category, price.
        input: PathBuf,
    },
    /// Build the vocabulary and train the configured topic model.
    Train {
        /// Model kind; overrides the config's model_kind.
        #[arg(long, value_enum)]
        kind: Option<KindArg>,
    },
    /// Print the top words and top documents of every topic.
    Topics {
        #[arg(long, default_value_t = 10)]
        words: usize,
        #[arg(long, default_value_t = 3)]
        docs: usize,
    },
    /// Train the vote-ranking random forest on the stored documents.
    TrainForest,
    /// Rank websites for an item.
    Recommend {
        #[arg(long)]
        description: String,
        #[arg(long)]
        category: String,
        /// Desired selling price; required in votes mode, ignored otherwise.
        #[arg(long)]
        price: Option<f64>,
        #[arg(long, value_enum)]
        mode: RecommendMode,
    },
    /// Run an NDPM sweep over topic counts or tree counts.
    Evaluate {
        /// JSON list of query items.
        #[arg(long)]
        queries: PathBuf,
        /// JSON list of preference judgments keyed by query id.
        #[arg(long)]
        judgments: PathBuf,
        #[arg(long, value_enum)]
        sweep: SweepArg,
        /// Comma-separated parameter values (topic or tree counts).
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<usize>,
        /// Representation for the topics sweep (default: the config's model_kind).
        #[arg(long, value_enum)]
        kind: Option<EvalKindArg>,
        /// Ranking criterion for the topics sweep.
        #[arg(long, value_enum, default_value = "quantity")]
        criterion: CriterionArg,
        /// Also write the CSV to this path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic corpus, ground truth, queries and judgments.
    Synth {
        /// JSON synthetic-corpus spec.
        #[arg(long)]
        spec: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut config = match &cli.config {
        Some(path) => EngineConfig::load(path)?,
        None => EngineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let json = cli.json;
    match cli.command {
        Command::Ingest { input } => commands::ingest(&config, &input, json),
        Command::Train { kind } => {
            if let Some(kind) = kind {
                config.model_kind = match kind {
                    KindArg::Nmf => sellrank::topicmodel::ModelKind::Nmf,
                    KindArg::Lda => sellrank::topicmodel::ModelKind::Lda,
                };
            }
            commands::train(&config, json)
        }
        Command::Topics { words, docs } => commands::topics(&config, words, docs, json),
        Command::TrainForest => commands::train_forest(&config, json),
        Command::Recommend {
            description,
            category,
            price,
            mode,
        } => commands::recommend(&config, &description, &category, price, mode, json),
        Command::Evaluate {
            queries,
            judgments,
            sweep,
            values,
            kind,
            criterion,
            out,
        } => commands::evaluate(
            &config,
            &queries,
            &judgments,
            sweep,
            &values,
            kind,
            criterion,
            out.as_deref(),
            json,
        ),
        Command::Synth { spec, out } => commands::synth(&spec, &out, json),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", err.message());
            ExitCode::from(err.exit_code())
        }
    }
}
