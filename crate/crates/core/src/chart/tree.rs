use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::data::Skeleton;
use crate::error::{Error, Result};
use crate::grammar::{Grammar, Label};
use crate::scorer::ScoreTables;

/// `left_(start, split) right_(split, end) -> parent_(start, end)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AnchoredBinary {
    pub start: usize,
    pub split: usize,
    pub end: usize,
    /// Binary rule id.
    pub rule: usize,
    pub left: Label,
    pub right: Label,
    pub parent: Label,
}

/// `child_pos -> parent_pos`, directly above the terminal at `pos`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AnchoredUnary {
    pub pos: usize,
    /// Index into [`Grammar::unary_rules`].
    pub rule: usize,
    pub child: Label,
    pub parent: Label,
}

/// `x_pos -> label_pos`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AnchoredTerminal {
    pub pos: usize,
    pub label: Label,
}

/// A derivation stored as its set of anchored rules.
///
/// Rules are kept sorted: binary rules by `(start, end)`, unary and terminal
/// rules by position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SemanticTree {
    pub len: usize,
    pub root: Label,
    pub binary: Vec<AnchoredBinary>,
    pub unary: Vec<AnchoredUnary>,
    pub terminal: Vec<AnchoredTerminal>,
}

impl SemanticTree {
    pub(crate) fn normalize(&mut self) {
        self.binary.sort_by_key(|b| (b.start, b.end));
        self.unary.sort_by_key(|u| u.pos);
        self.terminal.sort_by_key(|t| t.pos);
    }

    /// Checks the structural invariants: `T - 1` binary, `T` unary and `T`
    /// terminal rules, every rule licensed by `g`, unary rules only directly
    /// above terminals, and all pieces connected into one tree rooted at
    /// [`SemanticTree::root`].
    pub fn validate(&self, g: &Grammar) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidTree(m));
        let t = self.len;
        if t == 0 {
            return bad("no tokens".into());
        }
        if self.binary.len() != t - 1 || self.unary.len() != t || self.terminal.len() != t {
            return bad(format!(
                "{} binary / {} unary / {} terminal rules for {t} tokens",
                self.binary.len(),
                self.unary.len(),
                self.terminal.len()
            ));
        }
        let n = g.num_labels();
        let known = |l: Label| l.index() < n;

        let mut terminal = vec![None; t];
        for a in &self.terminal {
            if a.pos >= t || terminal[a.pos].is_some() {
                return bad(format!("terminal at position {} repeated or out of range", a.pos));
            }
            if !known(a.label) || !g.is_preterminal(a.label) {
                return bad(format!("terminal at {} has a non-preterminal label", a.pos));
            }
            terminal[a.pos] = Some(a.label);
        }
        let mut top = vec![None; t];
        for u in &self.unary {
            if u.pos >= t || top[u.pos].is_some() {
                return bad(format!("unary rule at position {} repeated or out of range", u.pos));
            }
            match g.unary_rules().get(u.rule) {
                Some(r) if r.child == u.child && r.parent == u.parent => {}
                _ => return bad(format!("unary rule at {} is not licensed", u.pos)),
            }
            if terminal[u.pos] != Some(u.child) {
                return bad(format!("unary rule at {} does not sit on its terminal", u.pos));
            }
            top[u.pos] = Some(u.parent);
        }

        let mut by_span: BTreeMap<(usize, usize), &AnchoredBinary> = BTreeMap::new();
        for b in &self.binary {
            if !(b.start < b.split && b.split < b.end && b.end <= t) {
                return bad(format!("binary rule over ({}, {}, {}) is malformed", b.start, b.split, b.end));
            }
            match g.binary_rules().get(b.rule) {
                Some(r) if r.left == b.left && r.right == b.right && r.parent == b.parent => {}
                _ => return bad(format!("binary rule over ({}, {}) is not licensed", b.start, b.end)),
            }
            if by_span.insert((b.start, b.end), b).is_some() {
                return bad(format!("span ({}, {}) used twice", b.start, b.end));
            }
        }
        Skeleton::new(t, by_span.keys().copied())?;

        let label_of = |i: usize, j: usize| -> Option<Label> {
            if j - i == 1 {
                top[i]
            } else {
                by_span.get(&(i, j)).map(|b| b.parent)
            }
        };
        for b in by_span.values() {
            if label_of(b.start, b.split) != Some(b.left) || label_of(b.split, b.end) != Some(b.right) {
                return bad(format!("children of ({}, {}) do not match its rule", b.start, b.end));
            }
        }
        if label_of(0, t) != Some(self.root) {
            return bad("root label does not match the full-span node".into());
        }
        Ok(())
    }

    /// Total score, accumulated bottom-up in the same order as the decoder.
    pub fn score(&self, g: &Grammar, s: &ScoreTables) -> f64 {
        let by_span: BTreeMap<(usize, usize), &AnchoredBinary> =
            self.binary.iter().map(|b| ((b.start, b.end), b)).collect();
        let mut leaf = vec![0.0; self.len];
        for u in &self.unary {
            leaf[u.pos] = s.unary_score(g, u.rule, u.pos) + s.terminal(u.pos, u.child.index());
        }
        fn go(i: usize, j: usize, g: &Grammar, s: &ScoreTables, spans: &BTreeMap<(usize, usize), &AnchoredBinary>, leaf: &[f64]) -> f64 {
            if j - i == 1 {
                return leaf[i];
            }
            let b = spans[&(i, j)];
            s.binary_score(g, b.rule, i, j) + go(i, b.split, g, s, spans, leaf) + go(b.split, j, g, s, spans, leaf)
        }
        go(0, self.len, g, s, &by_span, &leaf)
    }

    /// The unlabeled bracketing of this tree.
    pub fn skeleton(&self) -> Skeleton {
        Skeleton::from_trusted(self.len, self.binary.iter().map(|b| (b.start, b.end)).collect())
    }

    fn render(&self, g: &Grammar, tokens: &[impl AsRef<str>], mut emit: impl FnMut(usize, &str, bool)) {
        let by_span: BTreeMap<(usize, usize), &AnchoredBinary> =
            self.binary.iter().map(|b| ((b.start, b.end), b)).collect();
        let unary: BTreeMap<usize, &AnchoredUnary> = self.unary.iter().map(|u| (u.pos, u)).collect();
        // depth-first; `emit(depth, text, is_word)`
        let mut stack = vec![(0usize, self.len, 0usize)];
        while let Some((i, j, depth)) = stack.pop() {
            if j - i == 1 {
                let u = unary[&i];
                emit(depth, g.label_name(u.parent), false);
                let mut d = depth + 1;
                if u.child != u.parent {
                    emit(d, g.label_name(u.child), false);
                    d += 1;
                }
                let word = tokens.get(i).map(|w| w.as_ref()).unwrap_or("?");
                emit(d, word, true);
            } else {
                let b = by_span[&(i, j)];
                emit(depth, g.label_name(b.parent), false);
                stack.push((b.split, j, depth + 1));
                stack.push((i, b.split, depth + 1));
            }
        }
    }

    /// Bracketed form such as `(N (D not) (P good))`; a cancelled
    /// preterminal shows both labels, as in `(O (D not))`.
    pub fn to_bracketed(&self, g: &Grammar, tokens: &[impl AsRef<str>]) -> String {
        let mut out = String::new();
        let mut open: Vec<usize> = Vec::new();
        self.render(g, tokens, |depth, text, word| {
            while open.last().is_some_and(|&d| d >= depth) {
                open.pop();
                out.push(')');
            }
            if word {
                out.push(' ');
                out.push_str(text);
            } else {
                if !open.is_empty() {
                    out.push(' ');
                }
                out.push('(');
                out.push_str(text);
                open.push(depth);
            }
        });
        for _ in open {
            out.push(')');
        }
        out
    }

    /// One label or word per line, indented two spaces per level.
    pub fn ascii(&self, g: &Grammar, tokens: &[impl AsRef<str>]) -> String {
        let mut out = String::new();
        self.render(g, tokens, |depth, text, _| {
            let _ = writeln!(out, "{:width$}{text}", "", width = 2 * depth);
        });
        out
    }

    pub fn to_json_value(&self, g: &Grammar, tokens: &[impl AsRef<str>]) -> serde_json::Value {
        let name = |l: Label| g.label_name(l).to_string();
        let file = TreeFile {
            root: name(self.root),
            tokens: tokens.iter().map(|t| t.as_ref().to_string()).collect(),
            binary: self
                .binary
                .iter()
                .map(|b| BinaryFile {
                    start: b.start,
                    split: b.split,
                    end: b.end,
                    rule: b.rule,
                    left: name(b.left),
                    right: name(b.right),
                    parent: name(b.parent),
                })
                .collect(),
            unary: self
                .unary
                .iter()
                .map(|u| UnaryFile {
                    pos: u.pos,
                    rule: g.unary_rules()[u.rule].id,
                    child: name(u.child),
                    parent: name(u.parent),
                })
                .collect(),
            terminal: self
                .terminal
                .iter()
                .map(|a| TerminalFile {
                    pos: a.pos,
                    label: name(a.label),
                })
                .collect(),
        };
        serde_json::to_value(file).expect("tree serializes")
    }

    /// JSON listing of the anchored rules with their spans.
    pub fn to_json(&self, g: &Grammar, tokens: &[impl AsRef<str>]) -> String {
        self.to_json_value(g, tokens).to_string()
    }

    /// Parses [`SemanticTree::to_json`] output and validates it against `g`.
    pub fn from_json_value(g: &Grammar, value: serde_json::Value) -> Result<(SemanticTree, Vec<String>)> {
        let f: TreeFile = serde_json::from_value(value)?;
        let nb = g.num_binary();
        let mut tree = SemanticTree {
            len: f.tokens.len(),
            root: g.label(&f.root)?,
            binary: Vec::with_capacity(f.binary.len()),
            unary: Vec::with_capacity(f.unary.len()),
            terminal: Vec::with_capacity(f.terminal.len()),
        };
        for b in f.binary {
            tree.binary.push(AnchoredBinary {
                start: b.start,
                split: b.split,
                end: b.end,
                rule: b.rule,
                left: g.label(&b.left)?,
                right: g.label(&b.right)?,
                parent: g.label(&b.parent)?,
            });
        }
        for u in f.unary {
            tree.unary.push(AnchoredUnary {
                pos: u.pos,
                rule: u.rule.checked_sub(nb).unwrap_or(usize::MAX),
                child: g.label(&u.child)?,
                parent: g.label(&u.parent)?,
            });
        }
        for a in f.terminal {
            tree.terminal.push(AnchoredTerminal {
                pos: a.pos,
                label: g.label(&a.label)?,
            });
        }
        tree.normalize();
        tree.validate(g)?;
        Ok((tree, f.tokens))
    }

    pub fn from_json(g: &Grammar, text: &str) -> Result<(SemanticTree, Vec<String>)> {
        SemanticTree::from_json_value(g, serde_json::from_str(text)?)
    }

    /// Labels used anywhere in the tree.
    pub fn labels(&self) -> BTreeSet<Label> {
        let mut out = BTreeSet::new();
        out.extend(self.terminal.iter().map(|a| a.label));
        out.extend(self.unary.iter().map(|u| u.parent));
        out.extend(self.binary.iter().map(|b| b.parent));
        out
    }
}

#[derive(Serialize, Deserialize)]
struct TreeFile {
    root: String,
    tokens: Vec<String>,
    binary: Vec<BinaryFile>,
    unary: Vec<UnaryFile>,
    terminal: Vec<TerminalFile>,
}

#[derive(Serialize, Deserialize)]
struct BinaryFile {
    start: usize,
    split: usize,
    end: usize,
    rule: usize,
    left: String,
    right: String,
    parent: String,
}

#[derive(Serialize, Deserialize)]
struct UnaryFile {
    pos: usize,
    rule: usize,
    child: String,
    parent: String,
}

#[derive(Serialize, Deserialize)]
struct TerminalFile {
    pos: usize,
    label: String,
}
