//! Semantic labels, composition rules and the grammars built from them.
//!
//! A grammar has three kinds of rules. Binary rules `B C -> A` compose two
//! adjacent constituents. Preterminal-unary rules `B -> A` sit directly
//! above a word and may cancel a functional reading (`D -> O`). Terminal
//! rules `word -> A` are implicit: any word may take any preterminal label,
//! and the scorer decides how plausible that is.
//!
//! Rules are written bottom-up (children first) because composition derives
//! the label of a constituent from the labels of its parts.

use std::collections::{BTreeSet, HashMap};
use std::fmt::{self, Write as _};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A label id, local to the grammar that issued it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Label(pub u8);

impl Label {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LabelKind {
    Sentimental,
    Functional,
}

impl LabelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LabelKind::Sentimental => "sentimental",
            LabelKind::Functional => "functional",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelInfo {
    pub name: String,
    pub kind: LabelKind,
    pub preterminal: bool,
    pub root: bool,
}

/// `left right -> parent`. The id is the rule's index in [`Grammar::binary_rules`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BinaryRule {
    pub id: usize,
    pub left: Label,
    pub right: Label,
    pub parent: Label,
}

/// `child -> parent`, applied only directly above a terminal.
///
/// The id continues the binary numbering: unary rule `k` has id
/// `num_binary + k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct UnaryRule {
    pub id: usize,
    pub child: Label,
    pub parent: Label,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rule {
    Binary(BinaryRule),
    Unary(UnaryRule),
}

impl Rule {
    pub fn id(&self) -> usize {
        match self {
            Rule::Binary(r) => r.id,
            Rule::Unary(r) => r.id,
        }
    }
}

/// An immutable context-free grammar over semantic labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Grammar {
    name: String,
    labels: Vec<LabelInfo>,
    binary: Vec<BinaryRule>,
    unary: Vec<UnaryRule>,
    roots: Vec<Label>,
    preterminals: Vec<Label>,
    // rule indices keyed by `left * n + right`
    by_pair: Vec<Vec<usize>>,
    binary_by_parent: Vec<Vec<usize>>,
    unary_by_child: Vec<Vec<usize>>,
    unary_by_parent: Vec<Vec<usize>>,
}

/// Declared label, used while building a grammar.
#[derive(Clone, Debug)]
pub struct LabelDecl {
    pub name: String,
    pub kind: LabelKind,
    pub preterminal: bool,
    pub root: bool,
}

impl LabelDecl {
    pub fn new(name: &str, kind: LabelKind, preterminal: bool, root: bool) -> Self {
        LabelDecl {
            name: name.to_string(),
            kind,
            preterminal,
            root,
        }
    }
}

fn is_prioritized(name: &str) -> bool {
    name.len() > 1 && (name.ends_with('+') || name.ends_with('-'))
}

impl Grammar {
    /// Builds a grammar from label declarations and rules given by label name.
    ///
    /// Rules are stored exactly as given; mirror closure is the caller's
    /// business (see [`Grammar::symmetric_closure`]). Ids are assigned in
    /// canonical order: binary rules sorted by `(parent, left, right)`, then
    /// unary rules sorted by `(parent, child)`.
    pub fn new(
        name: &str,
        labels: Vec<LabelDecl>,
        binary: &[(&str, &str, &str)],
        unary: &[(&str, &str)],
    ) -> Result<Self> {
        let mut index: HashMap<&str, Label> = HashMap::new();
        if labels.len() > u8::MAX as usize {
            return Err(Error::InvalidGrammar("too many labels".into()));
        }
        for (i, l) in labels.iter().enumerate() {
            if index.insert(l.name.as_str(), Label(i as u8)).is_some() {
                return Err(Error::InvalidGrammar(format!(
                    "label `{}` declared twice",
                    l.name
                )));
            }
            if l.preterminal && is_prioritized(&l.name) {
                return Err(Error::InvalidGrammar(format!(
                    "prioritized label `{}` cannot be preterminal",
                    l.name
                )));
            }
        }
        let get = |n: &str| {
            index
                .get(n)
                .copied()
                .ok_or_else(|| Error::UnknownLabel(n.to_string()))
        };

        let mut bset = BTreeSet::new();
        for &(l, r, p) in binary {
            let key = (get(p)?, get(l)?, get(r)?);
            if !bset.insert(key) {
                return Err(Error::InvalidGrammar(format!(
                    "duplicate rule `{l} {r} -> {p}`"
                )));
            }
        }
        let mut uset = BTreeSet::new();
        for &(c, p) in unary {
            let key = (get(p)?, get(c)?);
            if !uset.insert(key) {
                return Err(Error::InvalidGrammar(format!(
                    "duplicate unary rule `{c} -> {p}`"
                )));
            }
        }

        let labels: Vec<LabelInfo> = labels
            .into_iter()
            .map(|d| LabelInfo {
                name: d.name,
                kind: d.kind,
                preterminal: d.preterminal,
                root: d.root,
            })
            .collect();
        let n = labels.len();
        let binary: Vec<BinaryRule> = bset
            .into_iter()
            .enumerate()
            .map(|(id, (parent, left, right))| BinaryRule {
                id,
                left,
                right,
                parent,
            })
            .collect();
        let nb = binary.len();
        let unary: Vec<UnaryRule> = uset
            .into_iter()
            .enumerate()
            .map(|(k, (parent, child))| UnaryRule {
                id: nb + k,
                child,
                parent,
            })
            .collect();

        let mut by_pair = vec![Vec::new(); n * n];
        for r in &binary {
            by_pair[r.left.index() * n + r.right.index()].push(r.id);
        }
        let mut binary_by_parent = vec![Vec::new(); n];
        for r in &binary {
            binary_by_parent[r.parent.index()].push(r.id);
        }
        let mut unary_by_child = vec![Vec::new(); n];
        let mut unary_by_parent = vec![Vec::new(); n];
        for (k, r) in unary.iter().enumerate() {
            unary_by_child[r.child.index()].push(k);
            unary_by_parent[r.parent.index()].push(k);
        }
        let roots = (0..n)
            .filter(|&i| labels[i].root)
            .map(|i| Label(i as u8))
            .collect();
        let preterminals = (0..n)
            .filter(|&i| labels[i].preterminal)
            .map(|i| Label(i as u8))
            .collect();

        Ok(Grammar {
            name: name.to_string(),
            labels,
            binary,
            unary,
            roots,
            preterminals,
            by_pair,
            binary_by_parent,
            unary_by_child,
            unary_by_parent,
        })
    }

    /// Adds `C B -> A` for every `B C -> A` that lacks its mirror.
    pub fn symmetric_closure(rules: &[(String, String, String)]) -> Vec<(String, String, String)> {
        let mut seen: BTreeSet<(String, String, String)> = rules.iter().cloned().collect();
        let mut out = rules.to_vec();
        for (l, r, p) in rules {
            let mirror = (r.clone(), l.clone(), p.clone());
            if seen.insert(mirror.clone()) {
                out.push(mirror);
            }
        }
        out
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_labels(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> impl Iterator<Item = Label> + '_ {
        (0..self.labels.len()).map(|i| Label(i as u8))
    }

    pub fn label_info(&self, label: Label) -> &LabelInfo {
        &self.labels[label.index()]
    }

    pub fn label_name(&self, label: Label) -> &str {
        &self.labels[label.index()].name
    }

    pub fn label(&self, name: &str) -> Result<Label> {
        self.labels
            .iter()
            .position(|l| l.name == name)
            .map(|i| Label(i as u8))
            .ok_or_else(|| Error::UnknownLabel(name.to_string()))
    }

    pub fn contains(&self, label: Label) -> bool {
        label.index() < self.labels.len()
    }

    pub fn roots(&self) -> &[Label] {
        &self.roots
    }

    pub fn is_root(&self, label: Label) -> bool {
        self.labels[label.index()].root
    }

    pub fn preterminals(&self) -> &[Label] {
        &self.preterminals
    }

    pub fn is_preterminal(&self, label: Label) -> bool {
        self.labels[label.index()].preterminal
    }

    pub fn binary_rules(&self) -> &[BinaryRule] {
        &self.binary
    }

    pub fn unary_rules(&self) -> &[UnaryRule] {
        &self.unary
    }

    pub fn num_binary(&self) -> usize {
        self.binary.len()
    }

    pub fn num_unary(&self) -> usize {
        self.unary.len()
    }

    /// Total non-terminal rule count (binary plus preterminal-unary).
    pub fn num_rules(&self) -> usize {
        self.binary.len() + self.unary.len()
    }

    pub fn rule(&self, id: usize) -> Option<Rule> {
        if id < self.binary.len() {
            Some(Rule::Binary(self.binary[id]))
        } else {
            self.unary
                .get(id - self.binary.len())
                .map(|r| Rule::Unary(*r))
        }
    }

    /// Binary rule ids for an ordered child pair, ascending. Unchecked.
    #[inline]
    pub fn pair_rules(&self, left: Label, right: Label) -> &[usize] {
        &self.by_pair[left.index() * self.labels.len() + right.index()]
    }

    /// Binary rule ids producing `parent`, ascending.
    #[inline]
    pub fn binary_to(&self, parent: Label) -> &[usize] {
        &self.binary_by_parent[parent.index()]
    }

    /// Indices into [`Grammar::unary_rules`] of unary rules with this child.
    #[inline]
    pub fn unary_from(&self, child: Label) -> &[usize] {
        &self.unary_by_child[child.index()]
    }

    /// Indices into [`Grammar::unary_rules`] of unary rules with this parent.
    #[inline]
    pub fn unary_to(&self, parent: Label) -> &[usize] {
        &self.unary_by_parent[parent.index()]
    }

    /// All binary rules with the ordered child pair `(left, right)`.
    pub fn lookup_binary(&self, left: Label, right: Label) -> Result<Vec<BinaryRule>> {
        for l in [left, right] {
            if !self.contains(l) {
                return Err(Error::LabelMismatch(l.index(), self.name.clone()));
            }
        }
        Ok(self
            .pair_rules(left, right)
            .iter()
            .map(|&id| self.binary[id])
            .collect())
    }

    /// Parent names licensed for a child pair given by name.
    pub fn lookup_binary_names(&self, left: &str, right: &str) -> Result<BTreeSet<String>> {
        let rules = self.lookup_binary(self.label(left)?, self.label(right)?)?;
        Ok(rules
            .iter()
            .map(|r| self.label_name(r.parent).to_string())
            .collect())
    }

    pub fn binary_rule_by_names(&self, left: &str, right: &str, parent: &str) -> Option<BinaryRule> {
        let (l, r, p) = (self.label(left).ok()?, self.label(right).ok()?, self.label(parent).ok()?);
        self.pair_rules(l, r)
            .iter()
            .map(|&id| self.binary[id])
            .find(|rule| rule.parent == p)
    }

    pub fn unary_rule_by_names(&self, child: &str, parent: &str) -> Option<UnaryRule> {
        let (c, p) = (self.label(child).ok()?, self.label(parent).ok()?);
        self.unary_from(c)
            .iter()
            .map(|&k| self.unary[k])
            .find(|rule| rule.parent == p)
    }

    pub fn display_binary(&self, r: &BinaryRule) -> String {
        format!(
            "{} {} -> {}",
            self.label_name(r.left),
            self.label_name(r.right),
            self.label_name(r.parent)
        )
    }

    pub fn display_unary(&self, r: &UnaryRule) -> String {
        format!("{} -> {}", self.label_name(r.child), self.label_name(r.parent))
    }

    /// Resolves `scg`, `glue`, or a path to a grammar file.
    pub fn resolve(spec: &str) -> Result<Self> {
        match spec {
            "scg" => Ok(builtin_scg()),
            "glue" => Ok(builtin_glue()),
            path => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                parse_grammar(&text, Some(Path::new(path)))
            }
        }
    }

    /// Serializes to the line-oriented grammar format with every rule explicit.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "@name {}", self.name);
        out.push_str("@no-symmetric-closure\n");
        for l in &self.labels {
            let _ = write!(out, "label {} {}", l.name, l.kind.as_str());
            if l.preterminal {
                out.push_str(" preterminal");
            }
            if l.root {
                out.push_str(" root");
            }
            out.push('\n');
        }
        for r in &self.binary {
            let _ = writeln!(out, "rule {}", self.display_binary(r));
        }
        for r in &self.unary {
            let _ = writeln!(out, "unary {}", self.display_unary(r));
        }
        out
    }

    /// Structural diagnostics. An empty list means the grammar is clean.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let n = self.labels.len();
        let mut diags = Vec::new();

        // bottom-up: which labels head some subtree over words
        let mut derivable = vec![false; n];
        for r in &self.unary {
            if self.is_preterminal(r.child) {
                derivable[r.parent.index()] = true;
            }
        }
        loop {
            let mut changed = false;
            for r in &self.binary {
                if derivable[r.left.index()]
                    && derivable[r.right.index()]
                    && !derivable[r.parent.index()]
                {
                    derivable[r.parent.index()] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }

        // top-down: which labels can occur below a root
        let mut reaches_root = vec![false; n];
        for &r in &self.roots {
            reaches_root[r.index()] = true;
        }
        loop {
            let mut changed = false;
            for r in &self.binary {
                if reaches_root[r.parent.index()] {
                    for c in [r.left, r.right] {
                        if !reaches_root[c.index()] {
                            reaches_root[c.index()] = true;
                            changed = true;
                        }
                    }
                }
            }
            // a unary rule over a non-preterminal never fires
            for r in self.unary.iter().filter(|r| self.is_preterminal(r.child)) {
                if reaches_root[r.parent.index()] && !reaches_root[r.child.index()] {
                    reaches_root[r.child.index()] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }

        if !self.roots.iter().any(|r| derivable[r.index()]) {
            diags.push(Diagnostic::NoRootDerivation);
        }
        for l in self.labels() {
            if !reaches_root[l.index()] {
                diags.push(Diagnostic::UnreachableFromRoot(self.label_name(l).to_string()));
            }
        }
        for l in self.labels() {
            if !derivable[l.index()] {
                diags.push(Diagnostic::NotDerivable(self.label_name(l).to_string()));
            }
        }
        for r in &self.unary {
            if !self.is_preterminal(r.child) {
                diags.push(Diagnostic::MisplacedUnary(self.display_unary(r)));
            }
        }
        diags
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Diagnostic {
    /// No root label heads any derivation.
    NoRootDerivation,
    /// The label never occurs inside a tree rooted at a root label.
    UnreachableFromRoot(String),
    /// No derivation over words produces the label.
    NotDerivable(String),
    /// A unary rule whose child is not preterminal could only fire above
    /// the second layer.
    MisplacedUnary(String),
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::NoRootDerivation => write!(f, "no root-reachable derivation"),
            Diagnostic::UnreachableFromRoot(l) => write!(f, "label `{l}` is unreachable from any root"),
            Diagnostic::NotDerivable(l) => write!(f, "label `{l}` is not derivable from any terminal"),
            Diagnostic::MisplacedUnary(r) => {
                write!(f, "unary rule `{r}` has a non-preterminal child")
            }
        }
    }
}

/// The sentiment composition grammar: 11 labels, 51 binary rules, 11
/// preterminal-unary rules, roots `P` and `N`.
pub fn builtin_scg() -> Grammar {
    use LabelKind::*;
    let labels = vec![
        LabelDecl::new("N", Sentimental, true, true),
        LabelDecl::new("P", Sentimental, true, true),
        LabelDecl::new("O", Sentimental, true, false),
        LabelDecl::new("D", Functional, true, false),
        LabelDecl::new("I", Functional, true, false),
        LabelDecl::new("+", Functional, true, false),
        LabelDecl::new("-", Functional, true, false),
        LabelDecl::new("N+", Functional, false, false),
        LabelDecl::new("P+", Functional, false, false),
        LabelDecl::new("N-", Functional, false, false),
        LabelDecl::new("P-", Functional, false, false),
    ];

    // One orientation of each rule; the mirror is added below.
    let mut generators: Vec<(&str, &str, &str)> = vec![
        // polarity propagation
        ("N", "O", "N"),
        ("N", "N", "N"),
        ("P", "O", "P"),
        ("P", "P", "P"),
        ("O", "O", "O"),
        // negation
        ("D", "P", "N"),
        ("D", "N", "P"),
        // irrealis blocking
        ("I", "P", "O"),
        ("I", "N", "O"),
        // resolution
        ("N", "P+", "P"),
        ("N-", "P+", "P"),
        ("N-", "P", "P"),
        ("P", "N+", "N"),
        ("P-", "N+", "N"),
        ("P-", "N", "N"),
    ];
    // priority modification, re-modification and neutral propagation
    for (pol, plus, minus) in [("P", "P+", "P-"), ("N", "N+", "N-")] {
        generators.push(("+", pol, plus));
        generators.push(("-", pol, minus));
        generators.push(("+", plus, plus));
        generators.push(("-", minus, minus));
        generators.push(("O", plus, plus));
        generators.push(("O", minus, minus));
    }

    let mut binary: Vec<(&str, &str, &str)> = Vec::new();
    for &(l, r, p) in &generators {
        binary.push((l, r, p));
        if l != r {
            binary.push((r, l, p));
        }
    }

    let unary = [
        ("N", "N"),
        ("P", "P"),
        ("O", "O"),
        ("D", "D"),
        ("I", "I"),
        ("+", "+"),
        ("-", "-"),
        ("D", "O"),
        ("I", "O"),
        ("+", "O"),
        ("-", "O"),
    ];
    Grammar::new("scg", labels, &binary, &unary).expect("built-in grammar is valid")
}

/// The free baseline grammar: every `B C -> A` over `{P, N, O}`.
pub fn builtin_glue() -> Grammar {
    use LabelKind::Sentimental;
    let names = ["N", "P", "O"];
    let labels = vec![
        LabelDecl::new("N", Sentimental, true, true),
        LabelDecl::new("P", Sentimental, true, true),
        LabelDecl::new("O", Sentimental, true, false),
    ];
    let mut binary = Vec::new();
    for l in names {
        for r in names {
            for p in names {
                binary.push((l, r, p));
            }
        }
    }
    let unary: Vec<(&str, &str)> = names.iter().map(|&a| (a, a)).collect();
    Grammar::new("glue", labels, &binary, &unary).expect("built-in grammar is valid")
}

/// Parses the line-oriented grammar format.
///
/// ```text
/// @name tiny
/// label P sentimental preterminal root
/// label D functional preterminal
/// rule D P -> N        # mirror P D -> N added unless @no-symmetric-closure
/// unary D -> O
/// ```
pub fn parse_grammar(text: &str, source: Option<&Path>) -> Result<Grammar> {
    let mut name = source
        .and_then(|p| p.file_stem())
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "custom".to_string());
    let mut closure = true;
    let mut labels = Vec::new();
    let mut binary: Vec<(String, String, String)> = Vec::new();
    let mut unary: Vec<(String, String)> = Vec::new();

    let syntax = |line: usize, msg: String| Error::GrammarSyntax { line, msg };

    for (no, raw) in text.lines().enumerate() {
        let line_no = no + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let words: Vec<&str> = line.split_whitespace().collect();
        match words[0] {
            "@no-symmetric-closure" if words.len() == 1 => closure = false,
            "@name" if words.len() == 2 => name = words[1].to_string(),
            "label" => {
                if words.len() < 3 {
                    return Err(syntax(line_no, "expected `label <name> <kind> [preterminal] [root]`".into()));
                }
                let kind = match words[2] {
                    "sentimental" => LabelKind::Sentimental,
                    "functional" => LabelKind::Functional,
                    other => return Err(syntax(line_no, format!("unknown label kind `{other}`"))),
                };
                let mut decl = LabelDecl::new(words[1], kind, false, false);
                for flag in &words[3..] {
                    match *flag {
                        "preterminal" => decl.preterminal = true,
                        "root" => decl.root = true,
                        other => return Err(syntax(line_no, format!("unknown label flag `{other}`"))),
                    }
                }
                if decl.preterminal && is_prioritized(&decl.name) {
                    return Err(syntax(
                        line_no,
                        format!("prioritized label `{}` cannot be preterminal", decl.name),
                    ));
                }
                labels.push(decl);
            }
            "rule" => {
                if words.len() != 5 || words[3] != "->" {
                    return Err(syntax(line_no, "expected `rule <L> <R> -> <P>`".into()));
                }
                let rule = (words[1].to_string(), words[2].to_string(), words[4].to_string());
                if binary.contains(&rule) {
                    return Err(syntax(line_no, format!("duplicate rule `{}`", line)));
                }
                binary.push(rule);
            }
            "unary" => {
                if words.len() != 4 || words[2] != "->" {
                    return Err(syntax(line_no, "expected `unary <B> -> <A>`".into()));
                }
                let rule = (words[1].to_string(), words[3].to_string());
                if unary.contains(&rule) {
                    return Err(syntax(line_no, format!("duplicate unary rule `{}`", line)));
                }
                unary.push(rule);
            }
            other => return Err(syntax(line_no, format!("unknown directive `{other}`"))),
        }
    }

    for (l, r, p) in &binary {
        for x in [l, r, p] {
            if !labels.iter().any(|d| &d.name == x) {
                return Err(Error::UnknownLabel(x.clone()));
            }
        }
    }
    if closure {
        binary = Grammar::symmetric_closure(&binary);
    }
    let b: Vec<(&str, &str, &str)> = binary
        .iter()
        .map(|(l, r, p)| (l.as_str(), r.as_str(), p.as_str()))
        .collect();
    let u: Vec<(&str, &str)> = unary.iter().map(|(c, p)| (c.as_str(), p.as_str())).collect();
    Grammar::new(&name, labels, &b, &u)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parents(g: &Grammar, l: &str, r: &str) -> Vec<String> {
        g.lookup_binary_names(l, r).unwrap().into_iter().collect()
    }

    #[test]
    fn scg_counts() {
        let g = builtin_scg();
        assert_eq!(g.num_labels(), 11);
        assert_eq!(g.num_binary(), 51);
        assert_eq!(g.num_unary(), 11);
        assert_eq!(g.num_rules(), 62);
        let roots: Vec<&str> = g.roots().iter().map(|&r| g.label_name(r)).collect();
        assert_eq!(roots, ["N", "P"]);
        let pre: Vec<&str> = g.preterminals().iter().map(|&r| g.label_name(r)).collect();
        assert_eq!(pre, ["N", "P", "O", "D", "I", "+", "-"]);
        let functional = g
            .labels()
            .filter(|&l| g.label_info(l).kind == LabelKind::Functional)
            .count();
        assert_eq!(functional, 8);
    }

    #[test]
    fn scg_composition_blocks() {
        let g = builtin_scg();
        let name = |l| g.label_name(l).to_string();
        let mut prop = 0;
        let mut neg = 0;
        let mut irr = 0;
        let mut conflict = 0;
        for r in g.binary_rules() {
            let (l, rr, p) = (name(r.left), name(r.right), name(r.parent));
            if l == "D" || rr == "D" {
                neg += 1;
            } else if l == "I" || rr == "I" {
                irr += 1;
            } else if ["N", "P", "O"].contains(&p.as_str())
                && [&l, &rr].iter().all(|x| ["N", "P", "O"].contains(&x.as_str()))
            {
                prop += 1;
            } else {
                conflict += 1;
            }
        }
        assert_eq!((prop, neg, conflict, irr), (7, 4, 36, 4));
    }

    #[test]
    fn scg_lookups() {
        let g = builtin_scg();
        assert_eq!(parents(&g, "D", "P"), ["N"]);
        assert_eq!(parents(&g, "D", "N"), ["P"]);
        assert!(parents(&g, "P", "N").is_empty());
        assert_eq!(parents(&g, "I", "P"), ["O"]);
        assert_eq!(parents(&g, "+", "P"), ["P+"]);
        assert_eq!(parents(&g, "N", "P+"), ["P"]);
        assert_eq!(parents(&g, "O", "N-"), ["N-"]);
        assert_eq!(parents(&g, "N-", "-"), ["N-"]);
        assert_eq!(parents(&g, "N", "-"), ["N-"]);
    }

    #[test]
    fn scg_binary_outputs_unique_and_commutative() {
        let g = builtin_scg();
        for r in g.binary_rules() {
            assert_eq!(g.pair_rules(r.left, r.right).len(), 1);
            let mirror = g.lookup_binary(r.right, r.left).unwrap();
            assert!(mirror.iter().any(|m| m.parent == r.parent));
        }
    }

    #[test]
    fn scg_no_prioritized_preterminals() {
        let g = builtin_scg();
        for n in ["N+", "P+", "N-", "P-"] {
            assert!(!g.is_preterminal(g.label(n).unwrap()));
        }
    }

    #[test]
    fn scg_unary_inventory() {
        let g = builtin_scg();
        let mut got: Vec<String> = g.unary_rules().iter().map(|r| g.display_unary(r)).collect();
        got.sort();
        let mut want: Vec<String> = ["N", "P", "O", "D", "I", "+", "-"]
            .iter()
            .map(|a| format!("{a} -> {a}"))
            .chain(["D", "I", "+", "-"].iter().map(|b| format!("{b} -> O")))
            .collect();
        want.sort();
        assert_eq!(got, want);
    }

    #[test]
    fn rule_ids_are_canonical() {
        let g = builtin_scg();
        for (i, r) in g.binary_rules().iter().enumerate() {
            assert_eq!(r.id, i);
        }
        let keys: Vec<_> = g
            .binary_rules()
            .iter()
            .map(|r| (r.parent, r.left, r.right))
            .collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        for (k, r) in g.unary_rules().iter().enumerate() {
            assert_eq!(r.id, g.num_binary() + k);
        }
    }

    #[test]
    fn glue_grammar() {
        let g = builtin_glue();
        assert_eq!(g.num_binary(), 27);
        assert_eq!(g.num_unary(), 3);
        assert_eq!(parents(&g, "P", "N"), ["N", "O", "P"]);
        assert_eq!(parents(&g, "O", "O"), ["N", "O", "P"]);
        assert!(g.validate().is_empty());
    }

    #[test]
    fn lookup_rejects_foreign_label() {
        let g = builtin_glue();
        assert!(matches!(
            g.lookup_binary(Label(0), Label(9)),
            Err(Error::LabelMismatch(9, _))
        ));
    }

    #[test]
    fn builtin_round_trips_through_text() {
        for g in [builtin_scg(), builtin_glue()] {
            let parsed = parse_grammar(&g.to_text(), None).unwrap();
            assert_eq!(parsed, g);
        }
    }

    #[test]
    fn parse_applies_symmetric_closure() {
        let text = "\
label N sentimental preterminal root
label P sentimental preterminal root
label D functional preterminal
rule D P -> N
unary D -> D
unary P -> P
";
        let g = parse_grammar(text, None).unwrap();
        assert_eq!(parents(&g, "P", "D"), ["N"]);
        assert_eq!(g.num_binary(), 2);

        let g = parse_grammar(&format!("@no-symmetric-closure\n{text}"), None).unwrap();
        assert!(parents(&g, "P", "D").is_empty());
        assert_eq!(g.num_binary(), 1);
    }

    #[test]
    fn parse_errors() {
        let undeclared = "label Z sentimental root\nrule X Y -> Z\n";
        assert!(matches!(parse_grammar(undeclared, None), Err(Error::UnknownLabel(x)) if x == "X"));

        let dup = "label O sentimental preterminal\nrule O O -> O\nrule O O -> O\n";
        assert!(matches!(parse_grammar(dup, None), Err(Error::GrammarSyntax { line: 3, .. })));

        let prio = "label P+ functional preterminal\n";
        assert!(matches!(parse_grammar(prio, None), Err(Error::GrammarSyntax { line: 1, .. })));

        assert!(parse_grammar("bogus line\n", None).is_err());
    }

    #[test]
    fn validate_builtin_clean() {
        assert!(builtin_scg().validate().is_empty());
    }

    #[test]
    fn validate_no_root_derivation() {
        let text = "\
label N sentimental preterminal root
label P sentimental preterminal root
label O sentimental preterminal
rule O O -> O
unary O -> O
";
        let g = parse_grammar(text, None).unwrap();
        let d = g.validate();
        assert!(d.contains(&Diagnostic::NoRootDerivation), "{d:?}");
    }

    #[test]
    fn validate_unreachable_label() {
        let text = "\
label P sentimental preterminal root
label O sentimental preterminal
label X sentimental
rule O P -> P
rule O O -> X
unary O -> O
unary P -> P
unary X -> O
";
        let g = parse_grammar(text, None).unwrap();
        let d = g.validate();
        assert!(d.contains(&Diagnostic::UnreachableFromRoot("X".into())), "{d:?}");
        assert!(d.contains(&Diagnostic::MisplacedUnary("X -> O".into())), "{d:?}");
    }
}
