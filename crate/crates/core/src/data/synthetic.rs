use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Example, Polarity};
use crate::chart::{AnchoredBinary, AnchoredTerminal, AnchoredUnary, SemanticTree, DEFAULT_MAX_LEN};
use crate::error::{Error, Result};
use crate::grammar::{Grammar, Label};
use crate::lexicon::{Lexicon, Preterminal};
use crate::scorer::is_right_functional;

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorConfig {
    pub n: usize,
    /// Nodes at this depth (the root is depth 0) must be preterminals.
    pub max_depth: usize,
    pub seed: u64,
    /// Chance that a preterminal-eligible node stops expanding.
    pub p_stop: f64,
    /// Samples longer than this are redrawn.
    pub max_len: usize,
    /// Redraws per example before giving up.
    pub retries: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            n: 1000,
            max_depth: 6,
            seed: 7,
            p_stop: 0.5,
            max_len: DEFAULT_MAX_LEN,
            retries: 1000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticExample {
    pub example: Example,
    pub tree: SemanticTree,
}

struct Sampler<'a> {
    g: &'a Grammar,
    cfg: &'a GeneratorConfig,
    words: BTreeMap<Label, Vec<String>>,
    // binary rules per parent, without right-attached functional preterminals
    expand: Vec<Vec<usize>>,
    // unary rule index used to terminate each label
    stop: Vec<Option<usize>>,
}

/// Partially built sample: the tree's rules plus its words.
struct Draft {
    tree: SemanticTree,
    words: Vec<String>,
}

impl Sampler<'_> {
    // Expands `a` over positions starting at `draft.words.len()`; returns the
    // end position, or `None` when the depth cap or length cap is hit.
    fn node(&self, a: Label, depth: usize, draft: &mut Draft, rng: &mut ChaCha8Rng) -> Option<usize> {
        let expand = &self.expand[a.index()];
        let can_stop = self.stop[a.index()].is_some();
        let stop = can_stop && (depth >= self.cfg.max_depth || expand.is_empty() || rng.gen_bool(self.cfg.p_stop));
        if stop {
            let k = self.stop[a.index()].expect("checked");
            let r = self.g.unary_rules()[k];
            let pos = draft.words.len();
            if pos >= self.cfg.max_len {
                return None;
            }
            let word = self.words[&r.child].choose(rng).expect("nonempty").clone();
            draft.words.push(word);
            draft.tree.unary.push(AnchoredUnary {
                pos,
                rule: k,
                child: r.child,
                parent: r.parent,
            });
            draft.tree.terminal.push(AnchoredTerminal { pos, label: r.child });
            return Some(pos + 1);
        }
        if depth >= self.cfg.max_depth || expand.is_empty() {
            return None;
        }
        let rule = self.g.binary_rules()[*expand.choose(rng).expect("nonempty")];
        let start = draft.words.len();
        let split = self.node(rule.left, depth + 1, draft, rng)?;
        let end = self.node(rule.right, depth + 1, draft, rng)?;
        draft.tree.binary.push(AnchoredBinary {
            start,
            split,
            end,
            rule: rule.id,
            left: rule.left,
            right: rule.right,
            parent: rule.parent,
        });
        Some(end)
    }
}

/// Samples derivations top-down from a root drawn uniformly from the
/// grammar's roots.
///
/// A preterminal-eligible node stops with probability `p_stop` (always at
/// `max_depth`) through its identity unary rule and draws a word from the
/// planted lexicon; otherwise it expands by a uniformly chosen binary rule.
/// Rules that attach a functional preterminal on the right are never
/// sampled and unary cancellations are never used, so every label is
/// decidable from the words alone (functional words scope to their right).
pub fn generate_synthetic(g: &Grammar, planted: &Lexicon, cfg: &GeneratorConfig) -> Result<Vec<SyntheticExample>> {
    if !(0.0..=1.0).contains(&cfg.p_stop) {
        return Err(Error::Config(format!("p_stop must be in [0, 1], got {}", cfg.p_stop)));
    }
    if cfg.max_len == 0 {
        return Err(Error::Config("max_len must be positive".into()));
    }
    let by_label = planted.by_label();
    let mut words = BTreeMap::new();
    for &a in g.preterminals() {
        let list = Preterminal::ALL
            .iter()
            .find(|p| p.name() == g.label_name(a))
            .and_then(|p| by_label.get(p))
            .filter(|l| !l.is_empty())
            .ok_or_else(|| {
                Error::Generation(format!("planted lexicon has no word for preterminal `{}`", g.label_name(a)))
            })?;
        words.insert(a, list.clone());
    }
    let expand = g
        .labels()
        .map(|a| {
            g.binary_to(a)
                .iter()
                .copied()
                .filter(|&r| !is_right_functional(g, g.binary_rules()[r].right))
                .collect()
        })
        .collect();
    let stop = g
        .labels()
        .map(|a| {
            let to_a = g.unary_to(a);
            let id = to_a.iter().copied().find(|&k| g.unary_rules()[k].child == a);
            id.or_else(|| to_a.iter().copied().find(|&k| g.is_preterminal(g.unary_rules()[k].child)))
        })
        .collect();
    let sampler = Sampler {
        g,
        cfg,
        words,
        expand,
        stop,
    };
    let roots: Vec<(Label, Polarity)> = g
        .roots()
        .iter()
        .filter_map(|&r| Polarity::from_label(g, r).map(|p| (r, p)))
        .collect();
    if roots.is_empty() {
        return Err(Error::Generation(format!("grammar `{}` has no P/N root", g.name())));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::with_capacity(cfg.n);
    for n in 0..cfg.n {
        let &(root, polarity) = roots.choose(&mut rng).expect("nonempty");
        let mut sample = None;
        for _ in 0..cfg.retries.max(1) {
            let mut draft = Draft {
                tree: SemanticTree {
                    len: 0,
                    root,
                    binary: Vec::new(),
                    unary: Vec::new(),
                    terminal: Vec::new(),
                },
                words: Vec::new(),
            };
            if let Some(len) = sampler.node(root, 0, &mut draft, &mut rng) {
                draft.tree.len = len;
                draft.tree.normalize();
                sample = Some(draft);
                break;
            }
        }
        let Some(Draft { tree, words }) = sample else {
            return Err(Error::Generation(format!(
                "example {n}: no derivation of `{}` within depth {} and {} tokens after {} attempts",
                g.label_name(root),
                cfg.max_depth,
                cfg.max_len,
                cfg.retries.max(1)
            )));
        };
        debug_assert!(tree.validate(g).is_ok());
        out.push(SyntheticExample {
            example: Example::new(words, polarity),
            tree,
        });
    }
    Ok(out)
}
