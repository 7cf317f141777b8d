use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use super::Skeleton;
use crate::error::{Error, Result};

/// An n-ary constituency tree in PTB bracketed notation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParseTree {
    Node { label: String, children: Vec<ParseTree> },
    Leaf(String),
}

impl ParseTree {
    pub fn leaves(&self) -> Vec<&str> {
        let mut out = Vec::new();
        fn go<'a>(t: &'a ParseTree, out: &mut Vec<&'a str>) {
            match t {
                ParseTree::Leaf(w) => out.push(w),
                ParseTree::Node { children, .. } => children.iter().for_each(|c| go(c, out)),
            }
        }
        go(self, &mut out);
        out
    }

    pub fn num_leaves(&self) -> usize {
        match self {
            ParseTree::Leaf(_) => 1,
            ParseTree::Node { children, .. } => children.iter().map(ParseTree::num_leaves).sum(),
        }
    }

    pub fn label(&self) -> Option<&str> {
        match self {
            ParseTree::Node { label, .. } => Some(label),
            ParseTree::Leaf(_) => None,
        }
    }
}

impl fmt::Display for ParseTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseTree::Leaf(w) => f.write_str(w),
            ParseTree::Node { label, children } => {
                write!(f, "({label}")?;
                for c in children {
                    write!(f, " {c}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, PartialEq)]
enum Tok<'a> {
    Open,
    Close,
    Atom(&'a str),
}

fn lex(text: &str) -> Vec<(usize, Tok<'_>)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        if c == '(' || c == ')' || c.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((s, Tok::Atom(&text[s..i])));
            }
            match c {
                '(' => out.push((i, Tok::Open)),
                ')' => out.push((i, Tok::Close)),
                _ => {}
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s, Tok::Atom(&text[s..])));
    }
    out
}

/// Parses one bracketed tree. A node's first atom is its label; `( ... )`
/// without one gets the empty label.
pub fn parse_bracketed(text: &str) -> Result<ParseTree> {
    let toks = lex(text);
    let err = |pos: usize, msg: &str| Error::Bracketed {
        pos,
        msg: msg.to_string(),
    };
    let Some((p0, first)) = toks.first() else {
        return Err(err(0, "empty input"));
    };
    if *first != Tok::Open {
        return Err(err(*p0, "expected `(`"));
    }

    // stack of (label, children) under construction
    let mut stack: Vec<(String, Vec<ParseTree>)> = Vec::new();
    let mut done: Option<ParseTree> = None;
    let mut idx = 0;
    while idx < toks.len() {
        let (pos, ref tok) = toks[idx];
        if done.is_some() {
            return Err(err(pos, "trailing input after tree"));
        }
        match tok {
            Tok::Open => {
                let label = match toks.get(idx + 1) {
                    Some((_, Tok::Atom(a))) => {
                        idx += 1;
                        a.to_string()
                    }
                    _ => String::new(),
                };
                stack.push((label, Vec::new()));
            }
            Tok::Close => {
                let (label, children) = stack.pop().ok_or_else(|| err(pos, "unbalanced `)`"))?;
                if children.is_empty() {
                    return Err(err(pos, "node without children"));
                }
                let node = ParseTree::Node { label, children };
                match stack.last_mut() {
                    Some((_, siblings)) => siblings.push(node),
                    None => done = Some(node),
                }
            }
            Tok::Atom(a) => match stack.last_mut() {
                Some((_, children)) => children.push(ParseTree::Leaf(a.to_string())),
                None => return Err(err(pos, "atom outside brackets")),
            },
        }
        idx += 1;
    }
    match done {
        Some(t) => Ok(t),
        None => Err(err(text.len(), "unbalanced `(`")),
    }
}

/// Reads one tree per non-empty line.
pub fn read_bracketed(path: impl AsRef<Path>) -> Result<Vec<ParseTree>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(no, l)| {
            parse_bracketed(l).map_err(|e| Error::Format {
                path: path.display().to_string(),
                line: no + 1,
                msg: e.to_string(),
            })
        })
        .collect()
}

/// Left-branching binarization with unary chains collapsed and labels
/// dropped; returns the resulting span set.
pub fn to_left_branching_cnf(tree: &ParseTree) -> Skeleton {
    fn go(t: &ParseTree, start: usize, spans: &mut BTreeSet<(usize, usize)>) -> usize {
        match t {
            ParseTree::Leaf(_) => start + 1,
            ParseTree::Node { children, .. } => {
                let mut end = start;
                for (n, c) in children.iter().enumerate() {
                    end = go(c, end, spans);
                    if n > 0 {
                        spans.insert((start, end));
                    }
                }
                end
            }
        }
    }
    let mut spans = BTreeSet::new();
    let len = go(tree, 0, &mut spans);
    Skeleton::from_trusted(len, spans)
}
