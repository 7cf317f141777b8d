//! Objectives and the optimizer loop.
//!
//! The training objective is
//! `w_cls * L_cls + w_pos * L_pos + w_str * L_str`:
//!
//! * `L_cls` is the negative log-likelihood of the gold root with every
//!   tree marginalized out. Its gradient with respect to the score tables
//!   is the difference of expected anchored-rule counts without and with
//!   the root fixed to the gold label.
//! * `L_pos` is a per-token softmax over preterminals of the terminal
//!   scores, on tokens a lexicon annotates.
//! * `L_str` is the negative log-probability of a gold bracketing under
//!   the span-score CRF.
//!
//! Per-example gradients are computed in parallel and merged in input
//! order, so a fixed seed gives bit-identical models whatever the thread
//! count.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chart::{inside, outside, rule_marginals, skeleton_inside, skeleton_marginals, DEFAULT_MAX_LEN};
use crate::data::{Example, Skeleton};
use crate::error::{Error, Result};
use crate::eval::{evaluate, EvalReport};
use crate::grammar::{Grammar, Label};
use crate::lexicon::WeakAnnotation;
use crate::scorer::{Gradients, ScoreTables, ScorerParams, DEFAULT_EMBED_DIM};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub w_cls: f64,
    pub w_pos: f64,
    pub w_str: f64,
    pub lr: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// The cosine schedule decays from `lr` to this value.
    pub lr_floor: f64,
    pub seed: u64,
    pub max_len: usize,
    pub grammar: String,
    pub embed_dim: usize,
    /// Half-width of the uniform weight initialization.
    pub init_scale: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            w_cls: 1.0,
            w_pos: 0.5,
            w_str: 0.1,
            lr: 0.1,
            momentum: 0.9,
            epochs: 30,
            batch_size: 16,
            lr_floor: 0.0,
            seed: 7,
            max_len: DEFAULT_MAX_LEN,
            grammar: "scg".into(),
            embed_dim: DEFAULT_EMBED_DIM,
            init_scale: 0.1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        for (name, w) in [("w_cls", self.w_cls), ("w_pos", self.w_pos), ("w_str", self.w_str)] {
            if !(w >= 0.0 && w.is_finite()) {
                return bad(format!("{name} must be a nonnegative number, got {w}"));
            }
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("learning rate must be positive, got {}", self.lr));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad(format!("momentum must be in [0, 1), got {}", self.momentum));
        }
        if !(self.lr_floor >= 0.0 && self.lr_floor <= self.lr) {
            return bad(format!("lr floor must be in [0, lr], got {}", self.lr_floor));
        }
        if self.epochs == 0 || self.batch_size == 0 || self.max_len == 0 || self.embed_dim == 0 {
            return bad("epochs, batch size, length cap and embedding size must be positive".into());
        }
        if !(self.init_scale >= 0.0 && self.init_scale.is_finite()) {
            return bad(format!("init scale must be nonnegative, got {}", self.init_scale));
        }
        Ok(())
    }

    /// Learning rate at optimizer step `t` of `total`.
    pub fn lr_at(&self, t: usize, total: usize) -> f64 {
        let frac = if total == 0 { 0.0 } else { t as f64 / total as f64 };
        self.lr_floor + 0.5 * (self.lr - self.lr_floor) * (1.0 + (std::f64::consts::PI * frac).cos())
    }
}

/// `-log p(gold | x)` and its gradient with respect to the score tables.
pub fn cls_objective(g: &Grammar, s: &ScoreTables, gold: Label) -> Result<(f64, ScoreTables)> {
    if !g.is_root(gold) {
        return Err(Error::Config(format!("`{}` is not a root label", g.label_name(gold))));
    }
    let chart = inside(g, s);
    let log_z_gold = chart.log_z_over(&[gold]);
    if chart.log_z == f64::NEG_INFINITY || log_z_gold == f64::NEG_INFINITY {
        return Err(Error::Underivable(format!("{} (root {})", g.name(), g.label_name(gold))));
    }
    let all = outside(g, s, &chart, g.roots());
    let conditioned = outside(g, s, &chart, &[gold]);
    let mut grad = rule_marginals(g, s, &chart, &all);
    grad.add_scaled(&rule_marginals(g, s, &chart, &conditioned), -1.0);
    Ok(((chart.log_z - log_z_gold).max(0.0), grad))
}

/// Summed `-log q(o_i | x)` over annotated positions, the number of
/// positions used, and the gradient. Annotated labels the grammar does not
/// declare as preterminals are skipped.
pub fn pos_objective(g: &Grammar, s: &ScoreTables, weak: &WeakAnnotation) -> Result<(f64, usize, ScoreTables)> {
    let mut grad = ScoreTables::zeros(g, s.len());
    let mut total = 0.0;
    let mut used = 0;
    for (&i, &p) in &weak.labels {
        if i >= s.len() {
            return Err(Error::Shape(format!(
                "annotation at position {i} of a {}-token sentence",
                s.len()
            )));
        }
        let Some(o) = p.in_grammar(g) else { continue };
        let pre = g.preterminals();
        let m = pre.iter().map(|a| s.terminal(i, a.index())).fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = pre.iter().map(|a| (s.terminal(i, a.index()) - m).exp()).sum();
        let log_norm = m + z.ln();
        total += log_norm - s.terminal(i, o.index());
        for a in pre {
            *grad.terminal_mut(i, a.index()) += (s.terminal(i, a.index()) - log_norm).exp();
        }
        *grad.terminal_mut(i, o.index()) -= 1.0;
        used += 1;
    }
    Ok((total, used, grad))
}

/// `-log r(k | x)` and its gradient (only span entries are nonzero).
pub fn str_objective(g: &Grammar, s: &ScoreTables, gold: &Skeleton) -> Result<(f64, ScoreTables)> {
    if gold.len() != s.len() {
        return Err(Error::Shape(format!(
            "gold skeleton over {} tokens for a {}-token sentence",
            gold.len(),
            s.len()
        )));
    }
    let chart = skeleton_inside(s);
    let loss = -chart.log_prob(s, gold)?;
    let mut grad = ScoreTables::zeros(g, s.len());
    grad.span = skeleton_marginals(s, &chart);
    for &(i, j) in gold.spans() {
        *grad.span_mut(i, j) -= 1.0;
    }
    Ok((loss.max(0.0), grad))
}

fn backprop<S: AsRef<str>>(g: &Grammar, p: &ScorerParams, tokens: &[S], up: &ScoreTables) -> Result<Gradients> {
    let mut grads = Gradients::zeros_like(p);
    p.accumulate_gradients(g, tokens, up, &mut grads)?;
    Ok(grads)
}

/// `L_cls` for one sentence, with its parameter gradient.
pub fn loss_cls<S: AsRef<str>>(g: &Grammar, p: &ScorerParams, tokens: &[S], gold: Label) -> Result<(f64, Gradients)> {
    let s = p.score_sentence(g, tokens)?;
    let (loss, up) = cls_objective(g, &s, gold)?;
    Ok((loss, backprop(g, p, tokens, &up)?))
}

/// Mean `L_pos` over the annotated positions of one sentence (zero, with a
/// zero gradient, when nothing is annotated).
pub fn loss_pos<S: AsRef<str>>(
    g: &Grammar,
    p: &ScorerParams,
    tokens: &[S],
    weak: &WeakAnnotation,
) -> Result<(f64, Gradients)> {
    let s = p.score_sentence(g, tokens)?;
    let (total, used, mut up) = pos_objective(g, &s, weak)?;
    if used == 0 {
        return Ok((0.0, Gradients::zeros_like(p)));
    }
    let c = 1.0 / used as f64;
    up.entries_mut().for_each(|x| *x *= c);
    Ok((total * c, backprop(g, p, tokens, &up)?))
}

/// `L_str` for one sentence, with its parameter gradient.
pub fn loss_str<S: AsRef<str>>(g: &Grammar, p: &ScorerParams, tokens: &[S], gold: &Skeleton) -> Result<(f64, Gradients)> {
    let s = p.score_sentence(g, tokens)?;
    let (loss, up) = str_objective(g, &s, gold)?;
    Ok((loss, backprop(g, p, tokens, &up)?))
}

/// Attention-weighted document logits.
#[derive(Clone, Debug, PartialEq)]
pub struct DocumentLogits {
    pub weights: Vec<f64>,
    pub logits: Vec<f64>,
}

/// Softmax attention over sentences with scores `v . rep_s`, applied to the
/// sentence logits.
pub fn aggregate_document(p: &ScorerParams, sentence_logits: &[Vec<f64>], sentence_reps: &[Vec<f64>]) -> Result<DocumentLogits> {
    if sentence_logits.is_empty() || sentence_logits.len() != sentence_reps.len() {
        return Err(Error::Shape(format!(
            "{} sentence logits and {} representations",
            sentence_logits.len(),
            sentence_reps.len()
        )));
    }
    let k = sentence_logits[0].len();
    if sentence_logits.iter().any(|l| l.len() != k) || sentence_reps.iter().any(|r| r.len() != p.dim()) {
        return Err(Error::Shape("ragged sentence logits or representations".into()));
    }
    let scores: Vec<f64> = sentence_reps
        .iter()
        .map(|r| r.iter().zip(&p.attention).map(|(a, b)| a * b).sum())
        .collect();
    let m = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - m).exp()).collect();
    let z: f64 = exps.iter().sum();
    let weights: Vec<f64> = exps.iter().map(|e| e / z).collect();
    let mut logits = vec![0.0; k];
    for (w, l) in weights.iter().zip(sentence_logits) {
        for (acc, x) in logits.iter_mut().zip(l) {
            *acc += w * x;
        }
    }
    Ok(DocumentLogits { weights, logits })
}

/// Gradients of [`aggregate_document`] given `d loss / d document logits`:
/// returns `(d sentence logits, d attention vector)`.
pub fn aggregate_document_backward(
    p: &ScorerParams,
    sentence_logits: &[Vec<f64>],
    sentence_reps: &[Vec<f64>],
    upstream: &[f64],
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let doc = aggregate_document(p, sentence_logits, sentence_reps)?;
    let d_logits = doc
        .weights
        .iter()
        .map(|w| upstream.iter().map(|u| w * u).collect())
        .collect();
    // d/d score_s = w_s (u . l_s - u . doc)
    let u_doc: f64 = upstream.iter().zip(&doc.logits).map(|(a, b)| a * b).sum();
    let mut d_att = vec![0.0; p.dim()];
    for ((w, l), r) in doc.weights.iter().zip(sentence_logits).zip(sentence_reps) {
        let u_l: f64 = upstream.iter().zip(l).map(|(a, b)| a * b).sum();
        let g = w * (u_l - u_doc);
        for (d, x) in d_att.iter_mut().zip(r) {
            *d += g * x;
        }
    }
    Ok((d_logits, d_att))
}

/// Per-epoch training summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss_cls: f64,
    /// Absent when no training token was annotated.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loss_pos: Option<f64>,
    /// Absent when no training sentence has a gold skeleton.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loss_str: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dev_accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dev_tree_f1: Option<f64>,
    /// Learning rate of the epoch's last step.
    pub lr: f64,
    pub skipped: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochRecord>,
}

impl TrainReport {
    /// One JSON object per line, one line per epoch.
    pub fn to_json_lines(&self) -> String {
        self.epochs
            .iter()
            .map(|r| serde_json::to_string(r).expect("record serializes") + "\n")
            .collect()
    }
}

/// Vocabulary in first-occurrence order.
pub fn build_vocab(examples: &[Example]) -> Vec<String> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for ex in examples {
        for t in &ex.tokens {
            if seen.insert(t.as_str()) {
                out.push(t.clone());
            }
        }
    }
    out
}

/// Fresh parameters over the training vocabulary, seeded by `cfg.seed`.
pub fn init_params(g: &Grammar, train: &[Example], cfg: &TrainConfig) -> ScorerParams {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    ScorerParams::init(g, &build_vocab(train), cfg.embed_dim, cfg.init_scale, &mut rng)
}

/// Splits off fold `k` of `folds` (after a seeded shuffle) as held-out data.
pub fn kfold_split(examples: &[Example], k: usize, folds: usize, seed: u64) -> Result<(Vec<Example>, Vec<Example>)> {
    if folds < 2 || k >= folds {
        return Err(Error::Config(format!("fold {k} of {folds} is not a valid fold")));
    }
    let mut idx: Vec<usize> = (0..examples.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (mut train, mut held) = (Vec::new(), Vec::new());
    for (n, &i) in idx.iter().enumerate() {
        if n % folds == k {
            held.push(examples[i].clone());
        } else {
            train.push(examples[i].clone());
        }
    }
    Ok((train, held))
}

#[derive(Default)]
struct Totals {
    cls: f64,
    n_cls: usize,
    pos: f64,
    n_pos: usize,
    str_: f64,
    n_str: usize,
    skipped: usize,
}

struct ExampleResult {
    cls: Option<f64>,
    pos: (f64, usize),
    str_: Option<f64>,
    grads: Option<Gradients>,
}

/// Loss parts and the weighted, normalized gradient of one example.
fn example_step(
    g: &Grammar,
    p: &ScorerParams,
    ex: &Example,
    cfg: &TrainConfig,
    scale: (f64, f64, f64),
) -> Result<ExampleResult> {
    let skipped = ExampleResult {
        cls: None,
        pos: (0.0, 0),
        str_: None,
        grads: None,
    };
    if ex.tokens.is_empty() || ex.tokens.len() > cfg.max_len {
        return Ok(skipped);
    }
    let s = p.score_sentence(g, &ex.tokens)?;
    let gold = ex.polarity.label(g)?;
    let (cls, g_cls) = match cls_objective(g, &s, gold) {
        Ok(x) => x,
        Err(Error::Underivable(_)) => return Ok(skipped),
        Err(e) => return Err(e),
    };
    let mut up = ScoreTables::zeros(g, s.len());
    up.add_scaled(&g_cls, cfg.w_cls * scale.0);
    let mut pos = (0.0, 0);
    if let Some(weak) = &ex.weak {
        let (total, used, g_pos) = pos_objective(g, &s, weak)?;
        pos = (total, used);
        if cfg.w_pos > 0.0 && used > 0 {
            up.add_scaled(&g_pos, cfg.w_pos * scale.1);
        }
    }
    let mut str_ = None;
    if let Some(k) = &ex.skeleton {
        let (loss, g_str) = str_objective(g, &s, k)?;
        str_ = Some(loss);
        if cfg.w_str > 0.0 {
            up.add_scaled(&g_str, cfg.w_str * scale.2);
        }
    }
    let grads = backprop(g, p, &ex.tokens, &up)?;
    Ok(ExampleResult {
        cls: Some(cls),
        pos,
        str_,
        grads: Some(grads),
    })
}

/// Momentum SGD state with one velocity buffer per tensor.
struct Sgd {
    velocity: Vec<Vec<f64>>,
    embedding: Vec<f64>,
}

impl Sgd {
    fn new(p: &ScorerParams) -> Self {
        let mut q = p.clone();
        Sgd {
            velocity: q.dense_mut().iter().map(|(_, t)| vec![0.0; t.len()]).collect(),
            embedding: vec![0.0; p.embedding.len()],
        }
    }

    // v = m v + g; theta -= lr v
    fn step(&mut self, p: &mut ScorerParams, grads: &Gradients, lr: f64, momentum: f64) {
        let d = p.dim();
        for ((_, theta), (v, (_, g))) in p
            .dense_mut()
            .into_iter()
            .zip(self.velocity.iter_mut().zip(grads.dense()))
        {
            for ((x, v), g) in theta.iter_mut().zip(v.iter_mut()).zip(g) {
                *v = momentum * *v + g;
                *x -= lr * *v;
            }
        }
        for v in self.embedding.iter_mut() {
            *v *= momentum;
        }
        for (&row, g) in &grads.embedding {
            for (v, g) in self.embedding[row * d..(row + 1) * d].iter_mut().zip(g) {
                *v += g;
            }
        }
        for (x, v) in p.embedding.iter_mut().zip(&self.embedding) {
            *x -= lr * v;
        }
    }
}

/// Trains `params` on `train`. `dev` examples are evaluated after every
/// epoch (tree F1 when every dev example carries a skeleton). `on_epoch` is
/// called with each record and the current parameters, e.g. to print or
/// checkpoint.
pub fn train(
    g: &Grammar,
    mut params: ScorerParams,
    train: &[Example],
    dev: Option<&[Example]>,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord, &ScorerParams) -> Result<()>,
) -> Result<(ScorerParams, TrainReport)> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::Config("training set is empty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_0f5a_u64);
    let steps_per_epoch = train.len().div_ceil(cfg.batch_size);
    let total_steps = steps_per_epoch * cfg.epochs;
    let mut opt = Sgd::new(&params);
    let mut report = TrainReport::default();
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut step = 0;

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut totals = Totals::default();
        let mut lr = cfg.lr;
        for batch in order.chunks(cfg.batch_size) {
            let n = batch.len() as f64;
            let n_pos: usize = batch
                .iter()
                .filter_map(|&i| train[i].weak.as_ref())
                .map(|w| w.labels.values().filter(|p| p.in_grammar(g).is_some()).count())
                .sum();
            let n_str = batch.iter().filter(|&&i| train[i].skeleton.is_some()).count();
            let scale = (1.0 / n, 1.0 / n_pos.max(1) as f64, 1.0 / n_str.max(1) as f64);
            let results: Vec<Result<ExampleResult>> = batch
                .par_iter()
                .map(|&i| example_step(g, &params, &train[i], cfg, scale))
                .collect();
            let mut grads = Gradients::zeros_like(&params);
            for r in results {
                let r = r?;
                let Some(gr) = r.grads else {
                    totals.skipped += 1;
                    continue;
                };
                grads.add_scaled(&gr, 1.0);
                if let Some(c) = r.cls {
                    totals.cls += c;
                    totals.n_cls += 1;
                }
                totals.pos += r.pos.0;
                totals.n_pos += r.pos.1;
                if let Some(s) = r.str_ {
                    totals.str_ += s;
                    totals.n_str += 1;
                }
            }
            lr = cfg.lr_at(step, total_steps);
            opt.step(&mut params, &grads, lr, cfg.momentum);
            step += 1;
        }
        if totals.n_cls == 0 {
            return Err(Error::Underivable(format!(
                "{} (every training sentence was skipped)",
                g.name()
            )));
        }
        let mean = |x: f64, n: usize| (n > 0).then(|| x / n as f64);
        let (dev_accuracy, dev_tree_f1) = match dev {
            Some(d) if !d.is_empty() => {
                let skeletons: Option<Vec<Skeleton>> = d.iter().map(|e| e.skeleton.clone()).collect();
                let r: EvalReport = evaluate(g, &params, d, skeletons.as_deref(), cfg.max_len)?;
                (Some(r.accuracy), r.tree_f1)
            }
            _ => (None, None),
        };
        let record = EpochRecord {
            epoch,
            loss_cls: totals.cls / totals.n_cls as f64,
            loss_pos: mean(totals.pos, totals.n_pos),
            loss_str: mean(totals.str_, totals.n_str),
            dev_accuracy,
            dev_tree_f1,
            lr,
            skipped: totals.skipped,
        };
        on_epoch(&record, &params)?;
        report.epochs.push(record);
    }
    Ok((params, report))
}
