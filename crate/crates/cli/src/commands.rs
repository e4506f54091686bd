use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, Context};
use log::{info, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use f1parse::chart::{cky_parse, Model};
use f1parse::grammar::{binarize_tree, debinarize_tree, induce, write_grammar, BinConfig, Grammar};
use f1parse::lossdp::{LossKind, LossMode};
use f1parse::metrics::{
    evaluate, loss_difference_export, noparse_tree, wilcoxon_signed_rank, write_loss_differences, WilcoxonResult,
};
use f1parse::oracle::{run_oracle_check, write_oracle_tsv, OracleConfig};
use f1parse::ssvm::{train, TrainConfig, TrainExample, TrainReport};
use f1parse::synth;
use f1parse::treebank::{
    preprocess, read_treebank, write_bracketed, write_treebank, CountingConfig, PreprocessOptions, Tree,
    TreebankReader,
};
use f1parse::Error;

use crate::config::{FileConfig, Horizontal, TrainSection};
use crate::{
    Cli, Command, CompareArgs, CountingOpts, EvalArgs, Failure, OracleArgs, ParseArgs, PreprocessArgs, ProtocolArgs,
    SynthArgs, SynthKind, TrainArgs, TrainOpts,
};

type CmdResult = Result<(), Failure>;

const DEFAULT_SEED: u64 = 42;

pub fn run(cli: Cli) -> CmdResult {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path).map_err(|e| Failure::Usage(format!("{e:#}")))?,
        None => FileConfig::default(),
    };
    if let Some(n) = cli.threads.or(file.threads) {
        if n == 0 {
            return Err(Failure::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    let seed = cli.seed.or(file.seed).unwrap_or(DEFAULT_SEED);
    match cli.command {
        Command::Preprocess(args) => cmd_preprocess(&args),
        Command::Synth(args) => cmd_synth(&args, seed),
        Command::Train(args) => cmd_train(&args, &file.train),
        Command::Parse(args) => cmd_parse(&args),
        Command::Eval(args) => cmd_eval(&args),
        Command::Compare(args) => cmd_compare(&args),
        Command::OracleCheck(args) => cmd_oracle_check(&args, &file, seed),
        Command::Protocol(args) => cmd_protocol(&args, &file.train),
    }
}

fn create_parent(path: &Path) -> io::Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => fs::create_dir_all(dir),
        _ => Ok(()),
    }
}

fn output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => {
            create_parent(p)?;
            let f = File::create(p).with_context(|| format!("creating {}", p.display()))?;
            Box::new(BufWriter::new(f))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> anyhow::Result<()> {
    let mut out = output(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn save_trees(path: &Path, trees: &[Tree]) -> anyhow::Result<()> {
    create_parent(path)?;
    write_treebank(path, trees).with_context(|| format!("writing {}", path.display()))
}

/// Reads a treebank that must hold at least one tree.
fn load_trees(path: &Path) -> anyhow::Result<Vec<Tree>> {
    let trees = read_treebank(path).with_context(|| format!("reading {}", path.display()))?;
    if trees.is_empty() {
        return Err(anyhow!("{}: no trees", path.display()));
    }
    Ok(trees)
}

fn counting(opts: &CountingOpts) -> CountingConfig {
    let base = if opts.binarized {
        CountingConfig::binarized()
    } else {
        CountingConfig::unbinarized()
    };
    base.with_preterminals(opts.include_preterminals)
}

fn cmd_preprocess(args: &PreprocessArgs) -> CmdResult {
    let file = File::open(&args.input).with_context(|| format!("opening {}", args.input.display()))?;
    let reader = TreebankReader::new(BufReader::new(file), args.input.display().to_string());
    let opts = PreprocessOptions {
        strip_functional: !args.keep_functional,
        remove_nulls: !args.keep_nulls,
        collapse_unaries: !args.no_collapse,
    };
    let (mut read, mut emptied, mut too_long) = (0, 0, 0);
    let mut kept = Vec::new();
    for tree in reader {
        let tree = tree?;
        read += 1;
        let clean = match preprocess(&tree, opts) {
            Ok(t) => t,
            Err(Error::EmptyTree) => {
                emptied += 1;
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        if args.max_len.is_some_and(|m| clean.num_tokens() > m) {
            too_long += 1;
            continue;
        }
        kept.push(clean);
    }
    if read == 0 {
        return Err(anyhow!("{}: no trees in input", args.input.display()).into());
    }
    save_trees(&args.out, &kept)?;
    info!(
        "read {read} trees, wrote {}; dropped {emptied} empty and {too_long} over the length limit",
        kept.len()
    );
    Ok(())
}

fn g1_treebank(count: usize) -> Vec<Tree> {
    let shapes = ["(X (X (X a) (X a)) (X a))", "(X (X a) (X a))"];
    (0..count)
        .map(|k| f1parse::treebank::parse_bracketed(shapes[k % 2]).expect("fixed tree"))
        .collect()
}

fn cmd_synth(args: &SynthArgs, seed: u64) -> CmdResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let trees = match args.kind {
        SynthKind::G1 => g1_treebank(args.count),
        SynthKind::G2 => synth::mode_difference_treebank(&mut rng, args.count),
        SynthKind::Pp => synth::pp_attachment_treebank(&mut rng, args.count, args.max_len),
        SynthKind::Nary => synth::nary_treebank(&mut rng, args.count),
    };
    save_trees(&args.out, &trees)?;
    info!("wrote {} trees to {}", trees.len(), args.out.display());
    Ok(())
}

/// Training options after merging flags, config file and defaults.
#[derive(Debug, Clone)]
pub struct TrainSettings {
    pub config: TrainConfig,
    pub bin: BinConfig,
    pub unk_threshold: usize,
}

fn resolve_train(opts: &TrainOpts, file: &TrainSection) -> Result<TrainSettings, Failure> {
    let usage = |m: String| Failure::Usage(m);
    let kind = match opts.loss {
        Some(k) => k,
        None => file.loss_kind().map_err(|e| usage(e.to_string()))?.unwrap_or(LossKind::F1),
    };
    let include = opts.include_preterminals || file.include_preterminals.unwrap_or(false);
    let d = TrainConfig::default();
    let config = TrainConfig {
        c: opts.c.or(file.c).unwrap_or(d.c),
        epsilon: opts.eps.or(file.epsilon).unwrap_or(d.epsilon),
        max_outer_iters: opts.max_iters.or(file.max_outer_iters).unwrap_or(d.max_outer_iters),
        loss_mode: LossMode {
            kind,
            exclude_preterminals: !include,
        },
        qp_tolerance: file.qp_tolerance.unwrap_or(d.qp_tolerance),
        qp_max_passes: file.qp_max_passes.unwrap_or(d.qp_max_passes),
        batch_size: opts.batch.or(file.batch_size).unwrap_or(d.batch_size),
    };
    config.validate().map_err(|e| usage(e.to_string()))?;
    let v = opts.v.unwrap_or(file.v.map_or(1, |v| v as i64));
    if v < 1 {
        return Err(usage(format!("--v must be at least 1, got {v}")));
    }
    let h = opts.h.or(file.h).unwrap_or(Horizontal(None));
    let bin = BinConfig::new(h.0, v as usize).map_err(|e| usage(e.to_string()))?;
    Ok(TrainSettings {
        config,
        bin,
        unk_threshold: opts
            .unk_threshold
            .or(file.unk_threshold)
            .unwrap_or(f1parse::grammar::DEFAULT_UNK_THRESHOLD),
    })
}

/// Binarizes, induces a grammar and trains.
pub fn train_on(trees: &[Tree], settings: &TrainSettings) -> anyhow::Result<(Arc<Grammar>, Model, TrainReport)> {
    let bin: Vec<Tree> = trees
        .par_iter()
        .map(|t| binarize_tree(t, settings.bin))
        .collect::<f1parse::Result<_>>()?;
    let grammar = Arc::new(induce(&bin, settings.unk_threshold)?);
    info!(
        "grammar: {} symbols, {} productions (h={}, v={})",
        grammar.num_symbols(),
        grammar.num_productions(),
        Horizontal(settings.bin.horizontal),
        settings.bin.vertical
    );
    let mode = settings.config.loss_mode;
    let examples: Vec<TrainExample> = bin
        .par_iter()
        .map(|t| TrainExample::new(t, &grammar, mode))
        .collect::<f1parse::Result<_>>()
        .context("gold tree not derivable under its own induced grammar")?;
    let (model, report) = train(&examples, Arc::clone(&grammar), &settings.config)?;
    info!(
        "{}: {} passes, {} constraints, objective {:.6}, converged {}",
        mode.kind, report.passes, report.constraints, report.objective, report.converged
    );
    Ok((grammar, model, report))
}

fn cmd_train(args: &TrainArgs, file: &TrainSection) -> CmdResult {
    let settings = resolve_train(&args.opts, file)?;
    let trees = load_trees(&args.trees)?;
    let (grammar, model, report) = train_on(&trees, &settings)?;
    if let Some(path) = &args.grammar_out {
        create_parent(path)?;
        let mut out = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
        write_grammar(&mut out, &grammar, None)?;
        out.flush()?;
    }
    create_parent(&args.model_out)?;
    model
        .save(&args.model_out)
        .with_context(|| format!("writing {}", args.model_out.display()))?;
    write_json(args.report.as_deref(), &report)?;
    Ok(())
}

/// Parses every sentence, debinarizing results; failures become flat
/// placeholder trees. Returns the trees and the number of failures.
pub fn parse_sentences(model: &Model, sentences: &[Vec<String>]) -> anyhow::Result<(Vec<Tree>, usize)> {
    let parsed: Vec<Option<Tree>> = sentences
        .par_iter()
        .map(|s| cky_parse(model, s).map(|p| debinarize_tree(&p.tree)).transpose())
        .collect::<f1parse::Result<_>>()?;
    let failures = parsed.iter().filter(|p| p.is_none()).count();
    let trees = parsed
        .into_iter()
        .zip(sentences)
        .map(|(p, s)| p.unwrap_or_else(|| noparse_tree(s)))
        .collect();
    Ok((trees, failures))
}

fn sentences_of(trees: &[Tree]) -> Vec<Vec<String>> {
    trees
        .iter()
        .map(|t| t.tokens().into_iter().map(str::to_string).collect())
        .collect()
}

fn read_token_lines(path: &Path) -> anyhow::Result<Vec<Vec<String>>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut out = Vec::new();
    for (k, line) in BufReader::new(f).lines().enumerate() {
        let toks: Vec<String> = line?.split_whitespace().map(str::to_string).collect();
        if toks.is_empty() {
            warn!("{}:{}: empty line skipped", path.display(), k + 1);
        } else {
            out.push(toks);
        }
    }
    if out.is_empty() {
        return Err(anyhow!("{}: no sentences", path.display()));
    }
    Ok(out)
}

fn cmd_parse(args: &ParseArgs) -> CmdResult {
    let model = Model::load(&args.model).with_context(|| format!("loading model {}", args.model.display()))?;
    let sentences = if args.tokens {
        read_token_lines(&args.input)?
    } else {
        sentences_of(&load_trees(&args.input)?)
    };
    let (trees, failures) = parse_sentences(&model, &sentences)?;
    let mut out = output(args.out.as_deref())?;
    for t in &trees {
        writeln!(out, "{}", write_bracketed(t))?;
    }
    out.flush()?;
    if failures > 0 {
        warn!("{failures} of {} sentences had no parse", sentences.len());
    }
    info!("parsed {} sentences", sentences.len());
    Ok(())
}

fn cmd_eval(args: &EvalArgs) -> CmdResult {
    let pred = load_trees(&args.pred)?;
    let gold = load_trees(&args.gold)?;
    let result = evaluate(&pred, &gold, counting(&args.counting))?;
    write_json(None, &result)?;
    Ok(())
}

fn cmd_compare(args: &CompareArgs) -> CmdResult {
    let a = load_trees(&args.pred_a)?;
    let b = load_trees(&args.pred_b)?;
    let gold = load_trees(&args.gold)?;
    let rows = loss_difference_export(&a, &b, &gold, counting(&args.counting))?;
    if let Some(path) = &args.tsv {
        let mut out = output(Some(path))?;
        write_loss_differences(&mut out, &rows)?;
        out.flush()?;
    }
    let diffs: Vec<f64> = rows.iter().map(|r| r.difference).collect();
    let result = wilcoxon_signed_rank(&diffs)?;
    write_json(None, &result)?;
    Ok(())
}

fn cmd_oracle_check(args: &OracleArgs, file: &FileConfig, seed: u64) -> CmdResult {
    let d = OracleConfig::default();
    let config = OracleConfig {
        trials: args.trials.or(file.oracle.trials).unwrap_or(d.trials),
        max_len: args.max_len.or(file.oracle.max_len).unwrap_or(d.max_len),
        seed,
        max_productions: args
            .max_productions
            .or(file.oracle.max_productions)
            .unwrap_or(d.max_productions),
        exclude_preterminals: !args.include_preterminals,
    };
    let bound = f1parse::lossdp::DEFAULT_ENUMERATION_BOUND;
    if config.max_len == 0 || config.max_len > bound {
        return Err(Failure::Usage(format!("--max-len must be between 1 and {bound}")));
    }
    if config.max_productions == 0 {
        return Err(Failure::Usage("--max-productions must be at least 1".into()));
    }
    let report = run_oracle_check(&config)?;
    let mut out = output(args.out.as_deref())?;
    write_oracle_tsv(&mut out, &report.rows)?;
    out.flush()?;
    let (lai, cky) = (report.lai_mismatches(), report.cky_mismatches());
    info!(
        "{} trials: {} of {} loss-augmented rows match, {} of {} CKY checks match",
        config.trials,
        report.rows.len() - lai,
        report.rows.len(),
        report.cky.len() - cky,
        report.cky.len()
    );
    if lai + cky > 0 {
        return Err(Failure::Mismatch(format!(
            "{lai} loss-augmented and {cky} CKY results disagree with enumeration"
        )));
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct ProtocolRow {
    loss: LossKind,
    precision: f64,
    recall: f64,
    f1: f64,
    exact_match: f64,
    noparse: usize,
    passes: usize,
    constraints: usize,
    converged: bool,
}

#[derive(Debug, Serialize)]
struct Comparison {
    a: LossKind,
    b: LossKind,
    wilcoxon: WilcoxonResult,
}

#[derive(Debug, Serialize)]
struct ProtocolOutput {
    n_train: usize,
    n_test: usize,
    rows: Vec<ProtocolRow>,
    comparison: Comparison,
}

fn cmd_protocol(args: &ProtocolArgs, file: &TrainSection) -> CmdResult {
    let mut settings = resolve_train(&args.opts, file)?;
    if args.opts.loss.is_some() {
        warn!("--loss is ignored: the protocol trains with every loss");
    }
    let train_trees = load_trees(&args.train)?;
    let test_trees = load_trees(&args.test)?;
    let sentences = sentences_of(&test_trees);
    let dir: PathBuf = args.out_dir.clone();
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let eval_config = CountingConfig::unbinarized().with_preterminals(!settings.config.loss_mode.exclude_preterminals);

    let mut rows = Vec::new();
    let mut predictions = Vec::new();
    for kind in LossKind::ALL {
        settings.config.loss_mode.kind = kind;
        let (_, model, report) = train_on(&train_trees, &settings)?;
        model.save(dir.join(format!("model_{kind}.tsv")))?;
        write_json(Some(&dir.join(format!("report_{kind}.json"))), &report)?;
        let (pred, noparse) = parse_sentences(&model, &sentences)?;
        save_trees(&dir.join(format!("pred_{kind}.mrg")), &pred)?;
        let eval = evaluate(&pred, &test_trees, eval_config)?;
        info!(
            "{kind:>12}  P {:.4}  R {:.4}  F1 {:.4}  0/1 {:.4}",
            eval.precision, eval.recall, eval.f1, eval.exact_match
        );
        rows.push(ProtocolRow {
            loss: kind,
            precision: eval.precision,
            recall: eval.recall,
            f1: eval.f1,
            exact_match: eval.exact_match,
            noparse,
            passes: report.passes,
            constraints: report.constraints,
            converged: report.converged,
        });
        predictions.push((kind, pred));
    }

    let find = |k: LossKind| &predictions.iter().find(|(kind, _)| *kind == k).expect("trained").1;
    let diffs = loss_difference_export(find(LossKind::F1), find(LossKind::F1Bin), &test_trees, eval_config)?;
    let mut out = output(Some(&dir.join("loss_differences.tsv")))?;
    write_loss_differences(&mut out, &diffs)?;
    out.flush()?;
    let wilcoxon = wilcoxon_signed_rank(&diffs.iter().map(|r| r.difference).collect::<Vec<_>>())?;
    info!(
        "f1 vs f1-bin: {} non-zero differences, W = {}, p = {:.4}",
        wilcoxon.n_nonzero, wilcoxon.w_statistic, wilcoxon.p_value
    );
    write_json(
        None,
        &ProtocolOutput {
            n_train: train_trees.len(),
            n_test: test_trees.len(),
            rows,
            comparison: Comparison {
                a: LossKind::F1,
                b: LossKind::F1Bin,
                wilcoxon,
            },
        },
    )?;
    Ok(())
}
