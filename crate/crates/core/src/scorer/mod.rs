//! Anchored-rule scores for one sentence.
//!
//! The score of an anchored rule decomposes into shared parts:
//!
//! ```text
//! s(B_ik C_kj -> A_ij) = binary_rule[BC->A] + label[i][j][A] + span[i][j]
//! s(B_i -> A_i)        = unary_rule[B->A]   + label[i][i+1][A] + span[i][i+1]
//! s(x_i -> B_i)        = terminal[i][B]
//! ```
//!
//! [`ScoreTables`] holds those parts; the same shape doubles as a gradient
//! buffer for the loss with respect to each entry.

mod embedding;
mod lexicon_scorer;
mod model;

pub use embedding::{Gradients, ScorerParams, DEFAULT_EMBED_DIM, UNK};
pub use lexicon_scorer::LexiconScorer;
pub(crate) use lexicon_scorer::is_right_functional;
pub use model::{Model, FORMAT_VERSION};

use rand::Rng;

use crate::error::{Error, Result};
use crate::grammar::Grammar;

/// Anything that turns a token sequence into score tables.
pub trait Scorer {
    fn score<S: AsRef<str>>(&self, g: &Grammar, tokens: &[S]) -> Result<ScoreTables>;
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoreTables {
    len: usize,
    num_labels: usize,
    /// `len * num_labels`, indexed by `[i][A]`.
    pub terminal: Vec<f64>,
    /// One entry per binary rule id.
    pub binary_rule: Vec<f64>,
    /// One entry per unary rule index.
    pub unary_rule: Vec<f64>,
    /// `(len+1)^2 * num_labels`, indexed by `[span(i, j)][A]`.
    pub label: Vec<f64>,
    /// `(len+1)^2`, indexed by `span(i, j)`.
    pub span: Vec<f64>,
}

impl ScoreTables {
    /// All-zero tables. Used as gradient buffers; as scores this permits
    /// every label as a preterminal.
    pub fn zeros(g: &Grammar, len: usize) -> Self {
        let n = g.num_labels();
        let cells = (len + 1) * (len + 1);
        ScoreTables {
            len,
            num_labels: n,
            terminal: vec![0.0; len * n],
            binary_rule: vec![0.0; g.num_binary()],
            unary_rule: vec![0.0; g.num_unary()],
            label: vec![0.0; cells * n],
            span: vec![0.0; cells],
        }
    }

    /// Zero scores with non-preterminal terminal entries at `-inf`.
    pub fn neutral(g: &Grammar, len: usize) -> Self {
        let mut s = ScoreTables::zeros(g, len);
        for i in 0..len {
            for a in g.labels() {
                if !g.is_preterminal(a) {
                    s.terminal[i * s.num_labels + a.index()] = f64::NEG_INFINITY;
                }
            }
        }
        s
    }

    /// Scores drawn uniformly from `[-scale, scale]`.
    pub fn random<R: Rng>(g: &Grammar, len: usize, scale: f64, rng: &mut R) -> Self {
        let mut s = ScoreTables::neutral(g, len);
        let mut draw = |x: &mut f64| {
            if x.is_finite() {
                *x = rng.gen_range(-scale..=scale);
            }
        };
        s.terminal.iter_mut().for_each(&mut draw);
        s.binary_rule.iter_mut().for_each(&mut draw);
        s.unary_rule.iter_mut().for_each(&mut draw);
        for i in 0..len {
            for j in i + 1..=len {
                let c = s.cell(i, j);
                draw(&mut s.span[c]);
                for a in 0..s.num_labels {
                    draw(&mut s.label[c * s.num_labels + a]);
                }
            }
        }
        s
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    #[inline]
    pub fn cell(&self, i: usize, j: usize) -> usize {
        i * (self.len + 1) + j
    }

    #[inline]
    pub fn terminal(&self, i: usize, a: usize) -> f64 {
        self.terminal[i * self.num_labels + a]
    }

    #[inline]
    pub fn terminal_mut(&mut self, i: usize, a: usize) -> &mut f64 {
        &mut self.terminal[i * self.num_labels + a]
    }

    #[inline]
    pub fn label(&self, i: usize, j: usize, a: usize) -> f64 {
        self.label[self.cell(i, j) * self.num_labels + a]
    }

    #[inline]
    pub fn label_mut(&mut self, i: usize, j: usize, a: usize) -> &mut f64 {
        let c = self.cell(i, j) * self.num_labels + a;
        &mut self.label[c]
    }

    #[inline]
    pub fn span(&self, i: usize, j: usize) -> f64 {
        self.span[self.cell(i, j)]
    }

    #[inline]
    pub fn span_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        let c = self.cell(i, j);
        &mut self.span[c]
    }

    /// Score of the anchored binary rule `rule` over `(i, k, j)`.
    pub fn binary_score(&self, g: &Grammar, rule: usize, i: usize, j: usize) -> f64 {
        let r = g.binary_rules()[rule];
        self.binary_rule[rule] + self.label(i, j, r.parent.index()) + self.span(i, j)
    }

    /// Score of the anchored unary rule with index `k` at position `i`.
    pub fn unary_score(&self, g: &Grammar, k: usize, i: usize) -> f64 {
        let r = g.unary_rules()[k];
        self.unary_rule[k] + self.label(i, i + 1, r.parent.index()) + self.span(i, i + 1)
    }

    /// Checks that these tables fit grammar `g` and, when given, a sentence length.
    pub fn check_shape(&self, g: &Grammar, len: Option<usize>) -> Result<()> {
        if self.num_labels != g.num_labels()
            || self.binary_rule.len() != g.num_binary()
            || self.unary_rule.len() != g.num_unary()
        {
            return Err(Error::Shape(format!(
                "tables for {} labels / {} rules do not fit grammar `{}`",
                self.num_labels,
                self.binary_rule.len() + self.unary_rule.len(),
                g.name()
            )));
        }
        if let Some(len) = len {
            if len != self.len {
                return Err(Error::Shape(format!(
                    "tables cover {} tokens, sentence has {len}",
                    self.len
                )));
            }
        }
        Ok(())
    }

    /// `self += c * other` over every entry.
    pub fn add_scaled(&mut self, other: &ScoreTables, c: f64) {
        debug_assert_eq!(self.terminal.len(), other.terminal.len());
        let pairs = [
            (&mut self.terminal, &other.terminal),
            (&mut self.binary_rule, &other.binary_rule),
            (&mut self.unary_rule, &other.unary_rule),
            (&mut self.label, &other.label),
            (&mut self.span, &other.span),
        ];
        for (dst, src) in pairs {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += c * s;
            }
        }
    }

    pub fn entries_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.terminal
            .iter_mut()
            .chain(&mut self.binary_rule)
            .chain(&mut self.unary_rule)
            .chain(&mut self.label)
            .chain(&mut self.span)
    }

    pub fn entries(&self) -> impl Iterator<Item = &f64> {
        self.terminal
            .iter()
            .chain(&self.binary_rule)
            .chain(&self.unary_rule)
            .chain(&self.label)
            .chain(&self.span)
    }
}
