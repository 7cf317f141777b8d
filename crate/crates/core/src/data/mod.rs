//! Datasets, tree skeletons, bracketed trees and the synthetic corpus.

mod bracketed;
mod synthetic;

pub use bracketed::{parse_bracketed, read_bracketed, to_left_branching_cnf, ParseTree};
pub use synthetic::{generate_synthetic, GeneratorConfig, SyntheticExample};

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grammar::{Grammar, Label};
use crate::lexicon::WeakAnnotation;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    /// Name of the root label this polarity corresponds to.
    pub fn label_name(self) -> &'static str {
        match self {
            Polarity::Positive => "P",
            Polarity::Negative => "N",
        }
    }

    pub fn label(self, g: &Grammar) -> Result<Label> {
        g.label(self.label_name())
    }

    pub fn from_label(g: &Grammar, l: Label) -> Option<Polarity> {
        match g.label_name(l) {
            "P" => Some(Polarity::Positive),
            "N" => Some(Polarity::Negative),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Polarity::Positive => "positive",
            Polarity::Negative => "negative",
        }
    }

    pub fn parse(s: &str) -> Option<Polarity> {
        match s {
            "positive" | "P" | "1" => Some(Polarity::Positive),
            "negative" | "N" | "0" => Some(Polarity::Negative),
            _ => None,
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Example {
    pub tokens: Vec<String>,
    pub polarity: Polarity,
    pub skeleton: Option<Skeleton>,
    pub weak: Option<WeakAnnotation>,
}

impl Example {
    pub fn new(tokens: Vec<String>, polarity: Polarity) -> Self {
        Example {
            tokens,
            polarity,
            skeleton: None,
            weak: None,
        }
    }
}

/// An unlabeled full binary bracketing, as its set of width >= 2 spans
/// (the full span included).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Skeleton {
    len: usize,
    spans: BTreeSet<(usize, usize)>,
}

impl Skeleton {
    /// Validates that `spans` is a full binary bracketing of `len` tokens.
    pub fn new(len: usize, spans: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let spans: BTreeSet<(usize, usize)> = spans.into_iter().collect();
        let bad = |m: String| Err(Error::InvalidSkeleton(m));
        if len == 0 {
            return bad("no tokens".into());
        }
        for &(i, j) in &spans {
            if !(i < j && j <= len && j - i >= 2) {
                return bad(format!("span ({i}, {j}) is not a width >= 2 span of {len} tokens"));
            }
        }
        for &(a, b) in &spans {
            for &(c, d) in &spans {
                let crossing = a < c && c < b && b < d;
                if crossing {
                    return bad(format!("spans ({a}, {b}) and ({c}, {d}) cross"));
                }
            }
        }
        if spans.len() != len - 1 {
            return bad(format!("{} spans, a binary bracketing of {len} tokens has {}", spans.len(), len - 1));
        }
        if len >= 2 && !spans.contains(&(0, len)) {
            return bad("full span missing".into());
        }
        Ok(Skeleton { len, spans })
    }

    pub(crate) fn from_trusted(len: usize, spans: BTreeSet<(usize, usize)>) -> Self {
        Skeleton { len, spans }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn spans(&self) -> &BTreeSet<(usize, usize)> {
        &self.spans
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.spans.contains(&(i, j))
    }

    /// `((0 1) 2)`-style rendering with token indices as leaves.
    pub fn to_bracketed(&self) -> String {
        fn go(sk: &Skeleton, i: usize, j: usize, out: &mut String) {
            if j - i == 1 {
                out.push_str(&i.to_string());
                return;
            }
            let k = (i + 1..j)
                .find(|&k| (k - i == 1 || sk.contains(i, k)) && (j - k == 1 || sk.contains(k, j)))
                .expect("binary bracketing");
            out.push('(');
            go(sk, i, k, out);
            out.push(' ');
            go(sk, k, j, out);
            out.push(')');
        }
        let mut out = String::new();
        go(self, 0, self.len, &mut out);
        out
    }

    /// Left-branching bracketing `(((0 1) 2) 3)`.
    pub fn left_branching(len: usize) -> Self {
        Skeleton::from_trusted(len, (2..=len).map(|j| (0, j)).collect())
    }

    /// Right-branching bracketing `(0 (1 (2 3)))`.
    pub fn right_branching(len: usize) -> Self {
        Skeleton::from_trusted(len, (0..len.saturating_sub(1)).map(|i| (i, len)).collect())
    }

    /// Every full binary bracketing of `len` tokens.
    pub fn enumerate(len: usize) -> Vec<Skeleton> {
        fn go(i: usize, j: usize) -> Vec<Vec<(usize, usize)>> {
            if j - i == 1 {
                return vec![Vec::new()];
            }
            let mut out = Vec::new();
            for k in i + 1..j {
                for l in go(i, k) {
                    for r in go(k, j) {
                        let mut v = Vec::with_capacity(l.len() + r.len() + 1);
                        v.push((i, j));
                        v.extend(&l);
                        v.extend(&r);
                        out.push(v);
                    }
                }
            }
            out
        }
        go(0, len)
            .into_iter()
            .map(|v| Skeleton::from_trusted(len, v.into_iter().collect()))
            .collect()
    }
}

/// Whitespace tokenization after lowercasing.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_lowercase).collect()
}

/// Parses `label<TAB>text` lines.
pub fn parse_dataset(text: &str, origin: &str) -> Result<Vec<Example>> {
    let mut out = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let err = |msg: String| Error::Format {
            path: origin.to_string(),
            line: no + 1,
            msg,
        };
        let (label, body) = line
            .split_once('\t')
            .ok_or_else(|| err("expected `label<TAB>text`".into()))?;
        let polarity = Polarity::parse(label.trim())
            .ok_or_else(|| err(format!("unknown label `{}`", label.trim())))?;
        let tokens = tokenize(body);
        if tokens.is_empty() {
            return Err(err("empty text".into()));
        }
        out.push(Example::new(tokens, polarity));
    }
    Ok(out)
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Vec<Example>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(&text, &path.display().to_string())
}

pub fn dataset_to_tsv(examples: &[Example]) -> String {
    let mut out = String::new();
    for ex in examples {
        out.push_str(ex.polarity.as_str());
        out.push('\t');
        out.push_str(&ex.tokens.join(" "));
        out.push('\n');
    }
    out
}

pub fn save_dataset(path: impl AsRef<Path>, examples: &[Example]) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, dataset_to_tsv(examples)).map_err(|e| Error::io(path, e))
}

/// Cuts a document into sentences after tokens ending in `.`, `!` or `?`;
/// pieces longer than `cap` tokens are cut again every `cap` tokens.
pub fn split_document(text: &str, cap: usize) -> Vec<String> {
    let cap = cap.max(1);
    let mut sentences: Vec<Vec<&str>> = Vec::new();
    let mut current = Vec::new();
    for tok in text.split_whitespace() {
        current.push(tok);
        if tok.ends_with(['.', '!', '?']) {
            sentences.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        sentences.push(current);
    }
    sentences
        .iter()
        .flat_map(|s| s.chunks(cap).map(|c| c.join(" ")).collect::<Vec<_>>())
        .collect()
}
