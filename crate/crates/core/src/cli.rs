//! The `scg` command line: `train`, `eval`, `parse`, `gen` and `grammar`.
//!
//! Exit codes are 0 on success, 1 on a runtime failure and 2 on a usage
//! error. Failures print one line to stderr, `error: <kind>: <message>`.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::chart::DEFAULT_MAX_LEN;
use crate::data::{
    generate_synthetic, load_dataset, read_bracketed, save_dataset, to_left_branching_cnf, tokenize, Example,
    GeneratorConfig, Skeleton,
};
use crate::error::{Error, Result};
use crate::eval::{evaluate, predict, Prediction};
use crate::grammar::Grammar;
use crate::lexicon::{Lexicon, Source};
use crate::scorer::{LexiconScorer, Model, DEFAULT_EMBED_DIM};
use crate::training::{init_params, kfold_split, train, TrainConfig};

#[derive(Debug, Parser)]
#[command(name = "scg", version, about = "Sentiment composition grammar parser and trainer")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train an embedding scorer and write a model file.
    Train(TrainArgs),
    /// Report accuracy (and tree F1 given gold trees) on a labeled dataset.
    Eval(EvalArgs),
    /// Classify sentences and print their best semantic trees.
    Parse(ParseArgs),
    /// Sample a synthetic corpus from a planted lexicon.
    Gen(GenArgs),
    /// Print a grammar in the text format.
    Grammar(GrammarArgs),
}

#[derive(Debug, Clone, Args)]
pub struct LexiconArgs {
    /// Functional lexicon (word<TAB>label); the builtin one is used otherwise.
    #[arg(long)]
    pub functional_lexicon: Option<PathBuf>,
    /// Sentiment lexicon (word<TAB>P|N).
    #[arg(long)]
    pub sentiment_lexicon: Option<PathBuf>,
    /// Stopword lexicon (one word per line, labeled O).
    #[arg(long)]
    pub stopword_lexicon: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Training data (label<TAB>sentence).
    #[arg(long)]
    pub data: PathBuf,
    /// Held-out data evaluated after every epoch.
    #[arg(long)]
    pub dev: Option<PathBuf>,
    /// Gold trees for `--data`, one bracketed tree per line.
    #[arg(long)]
    pub trees: Option<PathBuf>,
    /// Gold trees for `--dev`.
    #[arg(long)]
    pub dev_trees: Option<PathBuf>,
    /// `scg`, `glue` or a grammar file.
    #[arg(long, default_value = "scg")]
    pub grammar: String,
    /// Model file to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the per-epoch JSON lines here.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    pub w_cls: f64,
    #[arg(long, default_value_t = 0.5)]
    pub w_pos: f64,
    #[arg(long, default_value_t = 0.1)]
    pub w_str: f64,
    #[arg(long, default_value_t = 0.1)]
    pub lr: f64,
    /// Final learning rate of the cosine schedule.
    #[arg(long, default_value_t = 0.0)]
    pub lr_floor: f64,
    #[arg(long, default_value_t = 0.9)]
    pub momentum: f64,
    #[arg(long, default_value_t = 30)]
    pub epochs: usize,
    #[arg(long, default_value_t = 16)]
    pub batch: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_LEN)]
    pub max_len: usize,
    #[arg(long, default_value_t = DEFAULT_EMBED_DIM)]
    pub embed_dim: usize,
    #[arg(long, default_value_t = 0.1)]
    pub init_scale: f64,
    /// Pretrained vectors in word2vec text format.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Rewrite `--out` every N epochs (0: only at the end).
    #[arg(long, default_value_t = 0)]
    pub checkpoint_every: usize,
    /// Hold out fold K of `--folds` as the dev set.
    #[arg(long, requires = "folds", conflicts_with = "dev")]
    pub fold: Option<usize>,
    #[arg(long, requires = "fold")]
    pub folds: Option<usize>,
    #[command(flatten)]
    pub lexicons: LexiconArgs,
}

#[derive(Debug, Args)]
pub struct ScorerArgs {
    /// Model file; without it a lexicon scorer is built from the lexicon flags.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Grammar for the lexicon scorer, or the grammar a model must match.
    #[arg(long)]
    pub grammar: Option<String>,
    /// Lexicon-scorer margin.
    #[arg(long, default_value_t = 5.0)]
    pub margin: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_LEN)]
    pub max_len: usize,
    #[command(flatten)]
    pub lexicons: LexiconArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Table,
    Json,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Gold trees aligned with `--data`.
    #[arg(long)]
    pub trees: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Table)]
    pub format: ReportFormat,
    #[command(flatten)]
    pub scorer: ScorerArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TreeFormat {
    Bracketed,
    Json,
    Ascii,
}

#[derive(Debug, Args)]
pub struct ParseArgs {
    /// One sentence per line; standard input otherwise.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = TreeFormat::Bracketed)]
    pub format: TreeFormat,
    #[command(flatten)]
    pub scorer: ScorerArgs,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Planted lexicon (word<TAB>label) with a word for every preterminal.
    #[arg(long)]
    pub lexicon: PathBuf,
    /// Corpus to write (label<TAB>sentence).
    #[arg(long)]
    pub out: PathBuf,
    /// Gold semantic trees as JSON lines.
    #[arg(long)]
    pub gold: Option<PathBuf>,
    /// Gold trees in bracketed form, usable as `train --trees`.
    #[arg(long)]
    pub trees: Option<PathBuf>,
    #[arg(long, default_value = "scg")]
    pub grammar: String,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 6)]
    pub max_depth: usize,
    #[arg(long, default_value_t = 0.5)]
    pub p_stop: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_LEN)]
    pub max_len: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GrammarFormat {
    Text,
    Summary,
}

#[derive(Debug, Args)]
pub struct GrammarArgs {
    #[arg(long, default_value = "scg")]
    pub grammar: String,
    #[arg(long, value_enum, default_value_t = GrammarFormat::Text)]
    pub format: GrammarFormat,
}

/// Parses arguments, runs the subcommand and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    configure_threads();
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}: {}", e.kind(), one_line(&e.to_string()));
            1
        }
    }
}

fn one_line(msg: &str) -> String {
    msg.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Caps the worker pool at `SCG_THREADS` when set.
fn configure_threads() {
    if let Some(n) = std::env::var("SCG_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        // a second call in the same process keeps the existing pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Parse(a) => cmd_parse(a),
        Command::Gen(a) => cmd_gen(a),
        Command::Grammar(a) => cmd_grammar(a),
    }
}

fn warn_all(warnings: Vec<String>) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

/// Functional (builtin unless given), sentiment and stopword lexicons merged
/// under the source precedence.
pub fn build_lexicon(a: &LexiconArgs) -> Result<Lexicon> {
    let mut lex = match &a.functional_lexicon {
        Some(p) => {
            let (l, w) = Lexicon::load(p, Source::Functional)?;
            warn_all(w);
            l
        }
        None => Lexicon::builtin_functional(),
    };
    for (path, source) in [(&a.sentiment_lexicon, Source::Sentiment), (&a.stopword_lexicon, Source::Stopword)] {
        if let Some(p) = path {
            let (l, w) = Lexicon::load(p, source)?;
            warn_all(w);
            lex.merge(&l);
        }
    }
    Ok(lex)
}

fn resolve_grammar(spec: &str) -> Result<Grammar> {
    let g = Grammar::resolve(spec)?;
    for d in g.validate() {
        eprintln!("warning: grammar `{}`: {d}", g.name());
    }
    Ok(g)
}

fn load_scorer(a: &ScorerArgs) -> Result<(Model, Grammar)> {
    match &a.model {
        Some(path) => {
            let expected = a.grammar.as_deref().map(resolve_grammar).transpose()?;
            Model::load(path, expected.as_ref())
        }
        None => {
            let g = resolve_grammar(a.grammar.as_deref().unwrap_or("scg"))?;
            let scorer = LexiconScorer::new(build_lexicon(&a.lexicons)?, a.margin)?;
            Ok((Model::Lexicon(scorer), g))
        }
    }
}

/// Reads gold trees and attaches their bracketings to `examples`.
fn attach_trees(examples: &mut [Example], path: &Path) -> Result<()> {
    let trees = read_bracketed(path)?;
    if trees.len() != examples.len() {
        return Err(Error::Shape(format!(
            "{} has {} trees for {} examples",
            path.display(),
            trees.len(),
            examples.len()
        )));
    }
    for (i, (ex, t)) in examples.iter_mut().zip(&trees).enumerate() {
        let k = to_left_branching_cnf(t);
        if k.len() != ex.tokens.len() {
            return Err(Error::Shape(format!(
                "example {i}: gold tree has {} leaves, sentence has {} tokens",
                k.len(),
                ex.tokens.len()
            )));
        }
        ex.skeleton = Some(k);
    }
    Ok(())
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let g = resolve_grammar(&a.grammar)?;
    let cfg = TrainConfig {
        w_cls: a.w_cls,
        w_pos: a.w_pos,
        w_str: a.w_str,
        lr: a.lr,
        momentum: a.momentum,
        epochs: a.epochs,
        batch_size: a.batch,
        lr_floor: a.lr_floor,
        seed: a.seed,
        max_len: a.max_len,
        grammar: g.name().to_string(),
        embed_dim: a.embed_dim,
        init_scale: a.init_scale,
    };
    cfg.validate()?;
    let lex = build_lexicon(&a.lexicons)?;
    let mut data = load_dataset(&a.data)?;
    if let Some(t) = &a.trees {
        attach_trees(&mut data, t)?;
    }
    let mut dev = match &a.dev {
        Some(p) => Some(load_dataset(p)?),
        None => None,
    };
    if let (Some(d), Some(t)) = (dev.as_mut(), &a.dev_trees) {
        attach_trees(d, t)?;
    }
    if let (Some(k), Some(folds)) = (a.fold, a.folds) {
        let (tr, held) = kfold_split(&data, k, folds, a.seed)?;
        data = tr;
        dev = Some(held);
    }
    for ex in data.iter_mut().chain(dev.iter_mut().flatten()) {
        ex.weak = Some(lex.annotate(&ex.tokens));
    }

    let mut params = init_params(&g, &data, &cfg);
    if let Some(p) = &a.embeddings {
        let found = params.load_word2vec(p)?;
        eprintln!("loaded {found} pretrained vectors from {}", p.display());
    }
    let mut lines = String::new();
    let stdout = io::stdout();
    let (params, _) = train(&g, params, &data, dev.as_deref(), &cfg, |record, p| {
        let line = serde_json::to_string(record)?;
        writeln!(stdout.lock(), "{line}").map_err(|e| Error::io("<stdout>", e))?;
        lines.push_str(&line);
        lines.push('\n');
        if a.checkpoint_every > 0 && record.epoch % a.checkpoint_every == 0 {
            Model::Embedding(p.clone()).save(&g, &a.out)?;
        }
        Ok(())
    })?;
    Model::Embedding(params).save(&g, &a.out)?;
    if let Some(r) = &a.report {
        write_file(r, &lines)?;
    }
    Ok(())
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    let (model, g) = load_scorer(&a.scorer)?;
    let mut data = load_dataset(&a.data)?;
    let skeletons: Option<Vec<Skeleton>> = match &a.trees {
        Some(t) => {
            attach_trees(&mut data, t)?;
            Some(data.iter().map(|e| e.skeleton.clone().expect("attached")).collect())
        }
        None => None,
    };
    let report = evaluate(&g, &model, &data, skeletons.as_deref(), a.scorer.max_len)?;
    match a.format {
        ReportFormat::Table => print!("{}", report.to_table()),
        ReportFormat::Json => println!("{}", report.to_json()),
    }
    Ok(())
}

fn render(g: &Grammar, tokens: &[String], pred: &Prediction, format: TreeFormat) -> String {
    let prob = |name: &str| g.label(name).ok().and_then(|l| pred.classification.prob(l)).unwrap_or(0.0);
    let (p_pos, p_neg) = (prob("P"), prob("N"));
    let root = g.label_name(pred.root);
    match format {
        TreeFormat::Bracketed => format!(
            "{root}\t{p_pos:.6}\t{p_neg:.6}\t{}\n",
            pred.tree.to_bracketed(g, tokens)
        ),
        TreeFormat::Ascii => format!(
            "{root}  p(P)={p_pos:.6}  p(N)={p_neg:.6}\n{}\n",
            pred.tree.ascii(g, tokens).trim_end()
        ),
        TreeFormat::Json => {
            let v = serde_json::json!({
                "tokens": tokens,
                "root": root,
                "p_positive": p_pos,
                "p_negative": p_neg,
                "tree_score": pred.tree_score,
                "tree": pred.tree.to_json_value(g, tokens),
            });
            format!("{v}\n")
        }
    }
}

fn render_error(line_no: usize, e: &Error, format: TreeFormat) -> String {
    match format {
        TreeFormat::Json => format!(
            "{}\n",
            serde_json::json!({ "line": line_no, "error": e.kind(), "message": e.to_string() })
        ),
        _ => format!("error\t{line_no}\t{}\t{}\n", e.kind(), one_line(&e.to_string())),
    }
}

fn cmd_parse(a: ParseArgs) -> Result<()> {
    let (model, g) = load_scorer(&a.scorer)?;
    let mut text = String::new();
    match &a.input {
        Some(p) => text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?,
        None => {
            io::stdin()
                .lock()
                .read_to_string(&mut text)
                .map_err(|e| Error::io("<stdin>", e))?;
        }
    }
    let lines: Vec<(usize, Vec<String>)> = text
        .lines()
        .enumerate()
        .map(|(n, l)| (n + 1, tokenize(l)))
        .filter(|(_, t)| !t.is_empty())
        .collect();
    let out: Vec<String> = lines
        .par_iter()
        .map(|(n, tokens)| match predict(&g, &model, tokens, a.scorer.max_len) {
            Ok(p) => render(&g, tokens, &p, a.format),
            Err(e) => render_error(*n, &e, a.format),
        })
        .collect();
    let stdout = io::stdout();
    let mut w = io::BufWriter::new(stdout.lock());
    for s in out {
        w.write_all(s.as_bytes()).map_err(|e| Error::io("<stdout>", e))?;
    }
    w.flush().map_err(|e| Error::io("<stdout>", e))
}

fn cmd_gen(a: GenArgs) -> Result<()> {
    let g = resolve_grammar(&a.grammar)?;
    let (planted, w) = Lexicon::load(&a.lexicon, Source::Sentiment)?;
    warn_all(w);
    let cfg = GeneratorConfig {
        n: a.n,
        max_depth: a.max_depth,
        seed: a.seed,
        p_stop: a.p_stop,
        max_len: a.max_len,
        ..Default::default()
    };
    let data = generate_synthetic(&g, &planted, &cfg)?;
    let examples: Vec<Example> = data.iter().map(|s| s.example.clone()).collect();
    save_dataset(&a.out, &examples)?;
    if let Some(p) = &a.gold {
        let text: String = data
            .iter()
            .map(|s| s.tree.to_json(&g, &s.example.tokens) + "\n")
            .collect();
        write_file(p, &text)?;
    }
    if let Some(p) = &a.trees {
        let text: String = data
            .iter()
            .map(|s| s.tree.to_bracketed(&g, &s.example.tokens) + "\n")
            .collect();
        write_file(p, &text)?;
    }
    Ok(())
}

fn cmd_grammar(a: GrammarArgs) -> Result<()> {
    let g = resolve_grammar(&a.grammar)?;
    match a.format {
        GrammarFormat::Text => print!("{}", g.to_text()),
        GrammarFormat::Summary => {
            let names = |ls: &[crate::grammar::Label]| {
                ls.iter().map(|&l| g.label_name(l)).collect::<Vec<_>>().join(" ")
            };
            println!("name         {}", g.name());
            println!("labels       {}", g.num_labels());
            println!("binary       {}", g.num_binary());
            println!("unary        {}", g.num_unary());
            println!("roots        {}", names(g.roots()));
            println!("preterminals {}", names(g.preterminals()));
        }
    }
    Ok(())
}
