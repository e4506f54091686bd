//! `f1parse`: preprocess treebanks, train grammar models with F1-driven
//! max-margin training, parse, evaluate and compare.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 oracle mismatch.
//! Logs go to stderr; stdout carries machine-readable output only.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::Horizontal;
use f1parse::lossdp::LossKind;

#[derive(Debug, Parser)]
#[command(name = "f1parse", version, about = "Max-margin grammar training with exact F1 loss-augmented inference")]
pub struct Cli {
    /// Worker threads (default: number of processors).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for randomized commands.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON configuration file; flags take precedence over it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Only log warnings and errors.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Strip functional tags and null elements, collapse unary chains.
    Preprocess(PreprocessArgs),
    /// Write a synthetic treebank.
    Synth(SynthArgs),
    /// Binarize trees, induce a grammar and train its weights.
    Train(TrainArgs),
    /// Parse sentences with a trained model; output is debinarized.
    Parse(ParseArgs),
    /// Score predicted trees against gold trees.
    Eval(EvalArgs),
    /// Per-sentence loss differences of two systems and a signed-rank test.
    Compare(CompareArgs),
    /// Check loss-augmented inference and CKY against brute force.
    OracleCheck(OracleArgs),
    /// Train with all four losses, evaluate each, and compare F1 against F1 (bin.).
    Protocol(ProtocolArgs),
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Drop trees with more tokens than this.
    #[arg(long)]
    max_len: Option<usize>,
    #[arg(long)]
    keep_functional: bool,
    #[arg(long)]
    keep_nulls: bool,
    #[arg(long)]
    no_collapse: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SynthKind {
    /// Left-branching trees over `a a a` and `a a`.
    G1,
    /// Flat and nested trees over `a b c`.
    G2,
    /// Separable PP-attachment sentences.
    Pp,
    /// Random n-ary trees.
    Nary,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    kind: SynthKind,
    #[arg(long, default_value_t = 200)]
    count: usize,
    /// Longest sentence for `pp`.
    #[arg(long, default_value_t = 12)]
    max_len: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct TrainOpts {
    /// Training loss.
    #[arg(long)]
    loss: Option<LossKind>,
    /// Regularization constant.
    #[arg(long = "C", allow_negative_numbers = true)]
    c: Option<f64>,
    /// Violation tolerance.
    #[arg(long, allow_negative_numbers = true)]
    eps: Option<f64>,
    /// Horizontal markovization (integer or `inf`).
    #[arg(long)]
    h: Option<Horizontal>,
    /// Vertical markovization (1 = no parent annotation).
    #[arg(long, allow_negative_numbers = true)]
    v: Option<i64>,
    /// Words seen fewer times also train their signature class.
    #[arg(long)]
    unk_threshold: Option<usize>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Separation calls per QP re-solve.
    #[arg(long)]
    batch: Option<usize>,
    /// Count preterminal nodes in the loss.
    #[arg(long)]
    include_preterminals: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Preprocessed training treebank.
    #[arg(long)]
    trees: PathBuf,
    #[arg(long)]
    model_out: PathBuf,
    #[arg(long)]
    grammar_out: Option<PathBuf>,
    /// Report path; stdout when omitted.
    #[arg(long)]
    report: Option<PathBuf>,
    #[command(flatten)]
    opts: TrainOpts,
}

#[derive(Debug, Args)]
pub struct ParseArgs {
    #[arg(long)]
    model: PathBuf,
    /// Treebank whose yields are parsed, or token lines with `--tokens`.
    #[arg(long = "in")]
    input: PathBuf,
    /// Input holds one whitespace-tokenized sentence per line.
    #[arg(long)]
    tokens: bool,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CountingOpts {
    /// Count constituents on the trees as given instead of debinarizing.
    #[arg(long)]
    binarized: bool,
    #[arg(long)]
    include_preterminals: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    gold: PathBuf,
    #[command(flatten)]
    counting: CountingOpts,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pred_a: PathBuf,
    #[arg(long)]
    pred_b: PathBuf,
    #[arg(long)]
    gold: PathBuf,
    /// Where to write the per-sentence difference table.
    #[arg(long)]
    tsv: Option<PathBuf>,
    #[command(flatten)]
    counting: CountingOpts,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    max_len: Option<usize>,
    #[arg(long)]
    max_productions: Option<usize>,
    #[arg(long)]
    include_preterminals: bool,
    /// TSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProtocolArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    test: PathBuf,
    /// Models, reports, predictions and difference table go here.
    #[arg(long)]
    out_dir: PathBuf,
    #[command(flatten)]
    opts: TrainOpts,
}

/// How a command failed, which decides the exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(anyhow::Error),
    Mismatch(String),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Data(e)
    }
}

impl From<f1parse::Error> for Failure {
    fn from(e: f1parse::Error) -> Self {
        Failure::Data(e.into())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Data(e.into())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Data(e.into())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = if cli.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Mismatch(msg)) => {
            eprintln!("mismatch: {msg}");
            ExitCode::from(3)
        }
    }
}
