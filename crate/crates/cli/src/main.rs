//! `plsa`: ingest collections, fit aspect models and the LSA baseline,
//! measure perplexity and run retrieval experiments.

mod commands;
mod error;
mod manifest;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "plsa", version, about = "Probabilistic latent semantic analysis toolkit")]
struct Cli {
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tokenize documents into a sparse count table and vocabulary.
    Ingest(IngestArgs),
    /// Split a count table into training and held-out tokens.
    Split(SplitArgs),
    /// Fit aspect models by EM or tempered EM.
    Train(TrainArgs),
    /// Write the unigram baseline model of a count table.
    Unigram(UnigramArgs),
    /// Truncated SVD of a count table for latent semantic indexing.
    Lsa(LsaArgs),
    /// Perplexity of a model on a count table.
    Perplexity(PerplexityArgs),
    /// Rank documents for queries and evaluate against relevance judgments.
    Query(QueryArgs),
    /// Most probable terms of every factor.
    Topics(TopicsArgs),
    /// Re-run a command from its manifest and verify its outputs.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum InputFormat {
    /// One document per non-empty line.
    Raw,
    /// SMART collection records (`.I`, `.T`, `.W`, ...).
    Smart,
    /// An existing `doc term count` triple file.
    Triples,
}

#[derive(Debug, Args, Serialize)]
struct IngestArgs {
    /// Input files, read in order.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "raw")]
    format: InputFormat,
    #[arg(long)]
    stopwords: Option<PathBuf>,
    /// Vocabulary for `--format triples`; placeholder terms otherwise.
    #[arg(long)]
    vocab: Option<PathBuf>,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct SplitArgs {
    #[arg(long)]
    counts: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Mode {
    Em,
    Tem,
}

#[derive(Debug, Args, Serialize)]
struct TrainArgs {
    #[arg(long)]
    counts: PathBuf,
    /// Number of factors; repeat or comma-separate for several models.
    #[arg(long = "k", required = true, value_delimiter = ',')]
    k: Vec<usize>,
    #[arg(long, value_enum, default_value = "tem")]
    mode: Mode,
    #[arg(long, default_value_t = 0.9)]
    eta: f64,
    #[arg(long, default_value_t = 0.5)]
    beta_min: f64,
    /// Relative held-out improvement that keeps training going.
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    /// Share of training tokens held out for early stopping.
    #[arg(long, default_value_t = 0.1)]
    heldout: f64,
    #[arg(long, default_value_t = 100)]
    max_iters_per_beta: usize,
    #[arg(long, default_value_t = 1000)]
    max_iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct UnigramArgs {
    #[arg(long)]
    counts: PathBuf,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct LsaArgs {
    #[arg(long)]
    counts: PathBuf,
    /// Number of dimensions; repeat or comma-separate for a sweep.
    #[arg(long = "k", required = true, value_delimiter = ',')]
    k: Vec<usize>,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct PerplexityArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    counts: PathBuf,
    /// Score `P(w|d)` instead of `P(d, w)`.
    #[arg(long)]
    conditional: bool,
    /// A second model to report the reduction factor against.
    #[arg(long)]
    baseline: Option<PathBuf>,
    /// Also write the report and a manifest here.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum QueryFormat {
    Smart,
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum QrelsFormat {
    /// `query_id doc_id` per line.
    Pairs,
    /// `query_id iteration doc_id relevance` per line.
    Trec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Similarity {
    Cosine,
    Dot,
    Kl,
}

#[derive(Debug, Args, Serialize)]
struct QueryArgs {
    /// Aspect models; several are averaged uniformly.
    #[arg(long)]
    model: Vec<PathBuf>,
    /// Rank by term-frequency cosine alone.
    #[arg(long, conflicts_with_all = ["model", "lsi"])]
    baseline_only: bool,
    /// An SVD written by `plsa lsa`.
    #[arg(long, conflicts_with = "model")]
    lsi: Option<PathBuf>,
    #[arg(long)]
    counts: PathBuf,
    /// Defaults to `vocab.txt` next to the counts.
    #[arg(long)]
    vocab: Option<PathBuf>,
    /// Defaults to `docs.txt` next to the counts.
    #[arg(long)]
    docs: Option<PathBuf>,
    #[arg(long)]
    queries: PathBuf,
    #[arg(long, value_enum, default_value = "smart")]
    query_format: QueryFormat,
    #[arg(long)]
    stopwords: Option<PathBuf>,
    #[arg(long)]
    qrels: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "pairs")]
    qrels_format: QrelsFormat,
    /// Weight of the term-matching score.
    #[arg(long, default_value_t = 0.5)]
    lambda: f64,
    #[arg(long, value_enum, default_value = "cosine")]
    similarity: Similarity,
    /// Fold-in temperature; defaults to the temperature stored with each model.
    #[arg(long)]
    fold_beta: Option<f64>,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct TopicsArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    vocab: PathBuf,
    #[arg(long, default_value_t = 10)]
    top: usize,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct ReplayArgs {
    manifest: PathBuf,
}

fn dispatch(command: Command, argv: &[String]) -> Result<()> {
    match command {
        Command::Ingest(a) => commands::ingest::run(&a, argv),
        Command::Split(a) => commands::data::split(&a, argv),
        Command::Train(a) => commands::train::run(&a, argv),
        Command::Unigram(a) => commands::data::unigram(&a, argv),
        Command::Lsa(a) => commands::train::lsa(&a, argv),
        Command::Perplexity(a) => commands::evaluate::perplexity(&a, argv),
        Command::Query(a) => commands::query::run(&a, argv),
        Command::Topics(a) => commands::evaluate::topics(&a, argv),
        Command::Replay(a) => replay(&a),
    }
}

fn replay(args: &ReplayArgs) -> Result<()> {
    let recorded = manifest::RunManifest::load(&args.manifest)?;
    let cli = Cli::try_parse_from(std::iter::once("plsa".to_string()).chain(recorded.argv.iter().cloned()))
        .map_err(|e| CliError::Usage(format!("recorded command does not parse: {e}")))?;
    if matches!(cli.command, Command::Replay(_)) {
        return Err(CliError::Usage("a replay manifest cannot be replayed".into()));
    }
    let here = std::env::current_dir().map_err(|e| CliError::io(".", e))?;
    std::env::set_current_dir(&recorded.cwd).map_err(|e| CliError::io(&recorded.cwd, e))?;
    let outcome = dispatch(cli.command, &recorded.argv).and_then(|()| recorded.changed_outputs());
    std::env::set_current_dir(&here).map_err(|e| CliError::io(&here, e))?;
    let changed = outcome?;
    if !changed.is_empty() {
        return Err(CliError::Mismatch(changed.join(", ")));
    }
    println!("reproduced {} outputs of `{}`", recorded.outputs.len(), recorded.command);
    Ok(())
}

fn main() {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        pool = pool.num_threads(n);
    }
    let result = match pool.build() {
        Ok(pool) => pool.install(|| dispatch(cli.command, &argv)),
        Err(e) => Err(CliError::Usage(format!("cannot start worker threads: {e}"))),
    };
    if let Err(e) = result {
        eprintln!("plsa: {e}");
        std::process::exit(e.exit_code());
    }
}
