use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rand::Rng;

use super::{ScoreTables, Scorer};
use crate::error::{Error, Result};
use crate::grammar::Grammar;

pub const DEFAULT_EMBED_DIM: usize = 64;

/// Vocabulary entry for out-of-vocabulary tokens; always row 0.
pub const UNK: &str = "<unk>";

/// Trainable shallow scorer.
///
/// Two views of the sentence feed the score heads. The lexical view is the
/// raw embedding `e_i` and drives the terminal head. The contextual view of
/// a span is `tanh(W * mean(e_i..e_j) + b)` and drives the label and span
/// heads.
#[derive(Clone, Debug, PartialEq)]
pub struct ScorerParams {
    pub(crate) vocab: Vec<String>,
    pub(crate) index: HashMap<String, usize>,
    pub(crate) dim: usize,
    pub(crate) num_labels: usize,
    /// `V x d`
    pub embedding: Vec<f64>,
    /// `L x d`, terminal head
    pub w_rule: Vec<f64>,
    pub b_rule: Vec<f64>,
    /// `d x d`, row-major: `pre[r] = sum_c w_ctx[r*d + c] * mean[c]`
    pub w_ctx: Vec<f64>,
    pub b_ctx: Vec<f64>,
    /// `L x d`, label head
    pub w_label: Vec<f64>,
    pub b_label: Vec<f64>,
    /// `d`, span head
    pub w_span: Vec<f64>,
    pub b_span: Vec<f64>,
    pub binary_rule: Vec<f64>,
    pub unary_rule: Vec<f64>,
    /// `d`, document attention query
    pub attention: Vec<f64>,
}

/// Gradient with respect to [`ScorerParams`]. Embedding rows are sparse.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Gradients {
    pub embedding: BTreeMap<usize, Vec<f64>>,
    pub w_rule: Vec<f64>,
    pub b_rule: Vec<f64>,
    pub w_ctx: Vec<f64>,
    pub b_ctx: Vec<f64>,
    pub w_label: Vec<f64>,
    pub b_label: Vec<f64>,
    pub w_span: Vec<f64>,
    pub b_span: Vec<f64>,
    pub binary_rule: Vec<f64>,
    pub unary_rule: Vec<f64>,
    pub attention: Vec<f64>,
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(dst: &mut [f64], a: f64, x: &[f64]) {
    for (d, v) in dst.iter_mut().zip(x) {
        *d += a * v;
    }
}

impl ScorerParams {
    /// Zero-initialized parameters over `vocab` (the unknown row is added in front).
    pub fn zeros<S: AsRef<str>>(g: &Grammar, vocab: &[S], dim: usize) -> Self {
        let mut words = vec![UNK.to_string()];
        for w in vocab {
            let w = w.as_ref();
            if w != UNK && !words.iter().any(|x| x == w) {
                words.push(w.to_string());
            }
        }
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        let (v, l) = (words.len(), g.num_labels());
        ScorerParams {
            vocab: words,
            index,
            dim,
            num_labels: l,
            embedding: vec![0.0; v * dim],
            w_rule: vec![0.0; l * dim],
            b_rule: vec![0.0; l],
            w_ctx: vec![0.0; dim * dim],
            b_ctx: vec![0.0; dim],
            w_label: vec![0.0; l * dim],
            b_label: vec![0.0; l],
            w_span: vec![0.0; dim],
            b_span: vec![0.0; 1],
            binary_rule: vec![0.0; g.num_binary()],
            unary_rule: vec![0.0; g.num_unary()],
            attention: vec![0.0; dim],
        }
    }

    /// Weights uniform in `[-scale, scale]`; biases and rule scalars zero.
    pub fn init<S: AsRef<str>, R: Rng>(
        g: &Grammar,
        vocab: &[S],
        dim: usize,
        scale: f64,
        rng: &mut R,
    ) -> Self {
        let mut p = ScorerParams::zeros(g, vocab, dim);
        for t in [
            &mut p.embedding,
            &mut p.w_rule,
            &mut p.w_ctx,
            &mut p.w_label,
            &mut p.w_span,
            &mut p.attention,
        ] {
            for x in t.iter_mut() {
                *x = rng.gen_range(-scale..=scale);
            }
        }
        p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    /// Embedding row of a token; unknown tokens map to row 0.
    pub fn row(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(0)
    }

    fn emb(&self, row: usize) -> &[f64] {
        &self.embedding[row * self.dim..(row + 1) * self.dim]
    }

    fn check_grammar(&self, g: &Grammar) -> Result<()> {
        if self.num_labels != g.num_labels()
            || self.binary_rule.len() != g.num_binary()
            || self.unary_rule.len() != g.num_unary()
        {
            return Err(Error::Shape(format!(
                "parameters for {} labels / {} rules do not fit grammar `{}`",
                self.num_labels,
                self.binary_rule.len() + self.unary_rule.len(),
                g.name()
            )));
        }
        Ok(())
    }

    /// Contextual vectors for every span `(i, j)`, `i < j`, keyed by `i * (T+1) + j`.
    fn contextual(&self, rows: &[usize]) -> Vec<Vec<f64>> {
        let (d, t) = (self.dim, rows.len());
        // W * e_t, so that W * mean(span) is the mean of these.
        let projected: Vec<Vec<f64>> = rows
            .iter()
            .map(|&r| {
                let e = self.emb(r);
                (0..d).map(|k| dot(&self.w_ctx[k * d..(k + 1) * d], e)).collect()
            })
            .collect();
        let mut out = vec![Vec::new(); (t + 1) * (t + 1)];
        let mut acc = vec![0.0; d];
        for i in 0..t {
            acc.iter_mut().for_each(|x| *x = 0.0);
            for j in i + 1..=t {
                for (a, p) in acc.iter_mut().zip(&projected[j - 1]) {
                    *a += p;
                }
                let w = (j - i) as f64;
                out[i * (t + 1) + j] = acc
                    .iter()
                    .zip(&self.b_ctx)
                    .map(|(a, b)| (a / w + b).tanh())
                    .collect();
            }
        }
        out
    }

    /// Contextual vector of the whole sentence, used as its representation.
    pub fn sentence_rep<S: AsRef<str>>(&self, tokens: &[S]) -> Result<Vec<f64>> {
        if tokens.is_empty() {
            return Err(Error::EmptySentence);
        }
        let rows: Vec<usize> = tokens.iter().map(|t| self.row(t.as_ref())).collect();
        let t = rows.len();
        Ok(self.contextual(&rows).swap_remove(t))
    }

    pub fn score_sentence<S: AsRef<str>>(&self, g: &Grammar, tokens: &[S]) -> Result<ScoreTables> {
        self.check_grammar(g)?;
        if tokens.is_empty() {
            return Err(Error::EmptySentence);
        }
        let rows: Vec<usize> = tokens.iter().map(|t| self.row(t.as_ref())).collect();
        let (d, t, l) = (self.dim, rows.len(), self.num_labels);
        let mut s = ScoreTables::neutral(g, t);
        s.binary_rule.copy_from_slice(&self.binary_rule);
        s.unary_rule.copy_from_slice(&self.unary_rule);

        for (i, &r) in rows.iter().enumerate() {
            let e = self.emb(r);
            for &a in g.preterminals() {
                let a = a.index();
                *s.terminal_mut(i, a) = dot(&self.w_rule[a * d..(a + 1) * d], e) + self.b_rule[a];
            }
        }
        let ctx = self.contextual(&rows);
        for i in 0..t {
            for j in i + 1..=t {
                let c = &ctx[i * (t + 1) + j];
                for a in 0..l {
                    *s.label_mut(i, j, a) = dot(&self.w_label[a * d..(a + 1) * d], c) + self.b_label[a];
                }
                *s.span_mut(i, j) = dot(&self.w_span, c) + self.b_span[0];
            }
        }
        Ok(s)
    }

    /// Adds the gradient of a loss to `grads`, given that loss's gradient
    /// with respect to every score-table entry.
    pub fn accumulate_gradients<S: AsRef<str>>(
        &self,
        g: &Grammar,
        tokens: &[S],
        upstream: &ScoreTables,
        grads: &mut Gradients,
    ) -> Result<()> {
        self.check_grammar(g)?;
        upstream.check_shape(g, Some(tokens.len()))?;
        if grads.w_rule.is_empty() {
            *grads = Gradients::zeros_like(self);
        }
        let rows: Vec<usize> = tokens.iter().map(|t| self.row(t.as_ref())).collect();
        let (d, t, l) = (self.dim, rows.len(), self.num_labels);

        for (dst, src) in [
            (&mut grads.binary_rule, &upstream.binary_rule),
            (&mut grads.unary_rule, &upstream.unary_rule),
        ] {
            for (a, b) in dst.iter_mut().zip(src) {
                *a += b;
            }
        }

        let mut d_emb: Vec<Vec<f64>> = vec![vec![0.0; d]; t];

        // terminal head on the lexical view
        for (i, &r) in rows.iter().enumerate() {
            let e = self.emb(r);
            for &a in g.preterminals() {
                let a = a.index();
                let up = upstream.terminal(i, a);
                if up == 0.0 {
                    continue;
                }
                axpy(&mut grads.w_rule[a * d..(a + 1) * d], up, e);
                grads.b_rule[a] += up;
                axpy(&mut d_emb[i], up, &self.w_rule[a * d..(a + 1) * d]);
            }
        }

        // label and span heads on the contextual view
        let ctx = self.contextual(&rows);
        // per-token sum over covering spans of d(pre)/len
        let mut diff = vec![vec![0.0; d]; t + 1];
        let mut any_span = false;
        let mut g_c = vec![0.0; d];
        for i in 0..t {
            for j in i + 1..=t {
                let up_span = upstream.span(i, j);
                let has_label = (0..l).any(|a| upstream.label(i, j, a) != 0.0);
                if up_span == 0.0 && !has_label {
                    continue;
                }
                any_span = true;
                let c = &ctx[i * (t + 1) + j];
                g_c.iter_mut().for_each(|x| *x = 0.0);
                for a in 0..l {
                    let up = upstream.label(i, j, a);
                    if up == 0.0 {
                        continue;
                    }
                    axpy(&mut grads.w_label[a * d..(a + 1) * d], up, c);
                    grads.b_label[a] += up;
                    axpy(&mut g_c, up, &self.w_label[a * d..(a + 1) * d]);
                }
                if up_span != 0.0 {
                    axpy(&mut grads.w_span, up_span, c);
                    grads.b_span[0] += up_span;
                    axpy(&mut g_c, up_span, &self.w_span);
                }
                let w = (j - i) as f64;
                for k in 0..d {
                    let g_pre = g_c[k] * (1.0 - c[k] * c[k]);
                    grads.b_ctx[k] += g_pre;
                    diff[i][k] += g_pre / w;
                    diff[j][k] -= g_pre / w;
                }
            }
        }
        if any_span {
            let mut run = vec![0.0; d];
            for (tok, &r) in rows.iter().enumerate() {
                for k in 0..d {
                    run[k] += diff[tok][k];
                }
                let e = self.emb(r);
                for (row_k, &a) in run.iter().enumerate() {
                    if a == 0.0 {
                        continue;
                    }
                    axpy(&mut grads.w_ctx[row_k * d..(row_k + 1) * d], a, e);
                    axpy(&mut d_emb[tok], a, &self.w_ctx[row_k * d..(row_k + 1) * d]);
                }
            }
        }

        for (tok, &r) in rows.iter().enumerate() {
            if d_emb[tok].iter().all(|&x| x == 0.0) {
                continue;
            }
            let slot = grads.embedding.entry(r).or_insert_with(|| vec![0.0; d]);
            for (a, b) in slot.iter_mut().zip(&d_emb[tok]) {
                *a += b;
            }
        }
        Ok(())
    }

    /// Dense parameter tensors (everything except the embedding), with names.
    pub fn dense_mut(&mut self) -> [(&'static str, &mut Vec<f64>); 11] {
        [
            ("w_rule", &mut self.w_rule),
            ("b_rule", &mut self.b_rule),
            ("w_ctx", &mut self.w_ctx),
            ("b_ctx", &mut self.b_ctx),
            ("w_label", &mut self.w_label),
            ("b_label", &mut self.b_label),
            ("w_span", &mut self.w_span),
            ("b_span", &mut self.b_span),
            ("binary_rule", &mut self.binary_rule),
            ("unary_rule", &mut self.unary_rule),
            ("attention", &mut self.attention),
        ]
    }

    /// All tensors with their declared shapes, in serialization order.
    pub fn tensors(&self) -> Vec<(&'static str, Vec<usize>, &[f64])> {
        let (d, l, v) = (self.dim, self.num_labels, self.vocab.len());
        vec![
            ("embedding", vec![v, d], &self.embedding),
            ("w_rule", vec![l, d], &self.w_rule),
            ("b_rule", vec![l], &self.b_rule),
            ("w_ctx", vec![d, d], &self.w_ctx),
            ("b_ctx", vec![d], &self.b_ctx),
            ("w_label", vec![l, d], &self.w_label),
            ("b_label", vec![l], &self.b_label),
            ("w_span", vec![d], &self.w_span),
            ("b_span", vec![1], &self.b_span),
            ("binary_rule", vec![self.binary_rule.len()], &self.binary_rule),
            ("unary_rule", vec![self.unary_rule.len()], &self.unary_rule),
            ("attention", vec![d], &self.attention),
        ]
    }

    pub fn tensor_mut(&mut self, name: &str) -> Option<&mut Vec<f64>> {
        if name == "embedding" {
            return Some(&mut self.embedding);
        }
        self.dense_mut()
            .into_iter()
            .find(|(n, _)| *n == name)
            .map(|(_, t)| t)
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|(_, _, t)| t.len()).sum()
    }

    /// Overwrites embedding rows from a word2vec-style text file
    /// (optional `count dim` header, then `word v1 ... vd` per line).
    /// Returns how many vocabulary words were found.
    pub fn load_word2vec(&mut self, path: impl AsRef<Path>) -> Result<usize> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut found = 0;
        for (no, line) in text.lines().enumerate() {
            let mut parts = line.split_whitespace();
            let Some(word) = parts.next() else { continue };
            let values: Vec<&str> = parts.collect();
            if no == 0 && values.len() == 1 {
                continue;
            }
            let bad = |msg: String| Error::Format {
                path: path.display().to_string(),
                line: no + 1,
                msg,
            };
            if values.len() != self.dim {
                return Err(bad(format!("expected {} values, found {}", self.dim, values.len())));
            }
            let Some(&row) = self.index.get(word) else { continue };
            for (k, v) in values.iter().enumerate() {
                self.embedding[row * self.dim + k] =
                    v.parse().map_err(|_| bad(format!("bad number `{v}`")))?;
            }
            found += 1;
        }
        Ok(found)
    }
}

impl Scorer for ScorerParams {
    fn score<S: AsRef<str>>(&self, g: &Grammar, tokens: &[S]) -> Result<ScoreTables> {
        self.score_sentence(g, tokens)
    }
}

impl Gradients {
    pub fn zeros_like(p: &ScorerParams) -> Self {
        let z = |v: &Vec<f64>| vec![0.0; v.len()];
        Gradients {
            embedding: BTreeMap::new(),
            w_rule: z(&p.w_rule),
            b_rule: z(&p.b_rule),
            w_ctx: z(&p.w_ctx),
            b_ctx: z(&p.b_ctx),
            w_label: z(&p.w_label),
            b_label: z(&p.b_label),
            w_span: z(&p.w_span),
            b_span: z(&p.b_span),
            binary_rule: z(&p.binary_rule),
            unary_rule: z(&p.unary_rule),
            attention: z(&p.attention),
        }
    }

    pub fn dense(&self) -> [(&'static str, &Vec<f64>); 11] {
        [
            ("w_rule", &self.w_rule),
            ("b_rule", &self.b_rule),
            ("w_ctx", &self.w_ctx),
            ("b_ctx", &self.b_ctx),
            ("w_label", &self.w_label),
            ("b_label", &self.b_label),
            ("w_span", &self.w_span),
            ("b_span", &self.b_span),
            ("binary_rule", &self.binary_rule),
            ("unary_rule", &self.unary_rule),
            ("attention", &self.attention),
        ]
    }

    fn dense_mut(&mut self) -> [&mut Vec<f64>; 11] {
        [
            &mut self.w_rule,
            &mut self.b_rule,
            &mut self.w_ctx,
            &mut self.b_ctx,
            &mut self.w_label,
            &mut self.b_label,
            &mut self.w_span,
            &mut self.b_span,
            &mut self.binary_rule,
            &mut self.unary_rule,
            &mut self.attention,
        ]
    }

    /// `self += c * other`.
    pub fn add_scaled(&mut self, other: &Gradients, c: f64) {
        if self.w_rule.is_empty() {
            *self = Gradients {
                embedding: BTreeMap::new(),
                ..other.clone()
            };
            for t in self.dense_mut() {
                t.iter_mut().for_each(|x| *x = 0.0);
            }
        }
        for (dst, src) in self.dense_mut().into_iter().zip(other.dense()) {
            for (a, b) in dst.iter_mut().zip(src.1) {
                *a += c * b;
            }
        }
        for (row, v) in &other.embedding {
            let slot = self
                .embedding
                .entry(*row)
                .or_insert_with(|| vec![0.0; v.len()]);
            for (a, b) in slot.iter_mut().zip(v) {
                *a += c * b;
            }
        }
    }

    /// Gradient entry by tensor name and flat index.
    pub fn get(&self, name: &str, index: usize, dim: usize) -> f64 {
        if name == "embedding" {
            let (row, col) = (index / dim, index % dim);
            return self.embedding.get(&row).map_or(0.0, |v| v[col]);
        }
        self.dense()
            .iter()
            .find(|(n, _)| *n == name)
            .map_or(0.0, |(_, t)| t[index])
    }

    pub fn is_zero(&self) -> bool {
        self.dense().iter().all(|(_, t)| t.iter().all(|&x| x == 0.0))
            && self.embedding.values().all(|v| v.iter().all(|&x| x == 0.0))
    }

    pub fn l2_norm(&self) -> f64 {
        let dense: f64 = self
            .dense()
            .iter()
            .map(|(_, t)| t.iter().map(|x| x * x).sum::<f64>())
            .sum();
        let emb: f64 = self
            .embedding
            .values()
            .map(|v| v.iter().map(|x| x * x).sum::<f64>())
            .sum();
        (dense + emb).sqrt()
    }
}
