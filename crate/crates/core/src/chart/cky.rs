use super::tree::{AnchoredBinary, AnchoredTerminal, AnchoredUnary, SemanticTree};
use crate::error::{Error, Result};
use crate::grammar::{Grammar, Label};
use crate::scorer::ScoreTables;

#[derive(Clone, Copy, Debug)]
enum Back {
    None,
    Unary(usize),
    Binary { split: usize, rule: usize },
}

/// Max-score chart. Ties go to the smallest split, then the smallest rule id.
#[derive(Clone, Debug)]
pub struct Viterbi {
    len: usize,
    num_labels: usize,
    best: Vec<f64>,
    back: Vec<Back>,
}

impl Viterbi {
    pub fn new(g: &Grammar, s: &ScoreTables) -> Viterbi {
        let (t, n) = (s.len(), g.num_labels());
        let mut v = Viterbi {
            len: t,
            num_labels: n,
            best: vec![f64::NEG_INFINITY; (t + 1) * (t + 1) * n],
            back: vec![Back::None; (t + 1) * (t + 1) * n],
        };
        for i in 0..t {
            let base = v.idx(i, i + 1, 0);
            for (k, r) in g.unary_rules().iter().enumerate() {
                if !g.is_preterminal(r.child) {
                    continue;
                }
                let score = s.unary_score(g, k, i) + s.terminal(i, r.child.index());
                let a = base + r.parent.index();
                if score > v.best[a] {
                    v.best[a] = score;
                    v.back[a] = Back::Unary(k);
                }
            }
        }
        for w in 2..=t {
            for i in 0..=t - w {
                let j = i + w;
                let base = v.idx(i, j, 0);
                for a in 0..n {
                    let (lab, sp) = (s.label(i, j, a), s.span(i, j));
                    let (mut best, mut back) = (f64::NEG_INFINITY, Back::None);
                    for k in i + 1..j {
                        for &r in g.binary_to(Label(a as u8)) {
                            let rule = g.binary_rules()[r];
                            let vb = v.best[v.idx(i, k, rule.left.index())];
                            let vc = v.best[v.idx(k, j, rule.right.index())];
                            if vb == f64::NEG_INFINITY || vc == f64::NEG_INFINITY {
                                continue;
                            }
                            // same association as `ScoreTables::binary_score`
                            let local = s.binary_rule[r] + lab + sp;
                            let score = local + vb + vc;
                            if score > best {
                                best = score;
                                back = Back::Binary { split: k, rule: r };
                            }
                        }
                    }
                    v.best[base + a] = best;
                    v.back[base + a] = back;
                }
            }
        }
        v
    }

    #[inline]
    fn idx(&self, i: usize, j: usize, a: usize) -> usize {
        (i * (self.len + 1) + j) * self.num_labels + a
    }

    /// Best subtree score for `a` over `(i, j)`; `-inf` when underivable.
    pub fn score(&self, i: usize, j: usize, a: Label) -> f64 {
        self.best[self.idx(i, j, a.index())]
    }

    /// Backtracks the best full-span tree rooted at `root`.
    pub fn tree(&self, g: &Grammar, root: Label) -> Result<(SemanticTree, f64)> {
        let t = self.len;
        if t == 0 {
            return Err(Error::EmptySentence);
        }
        let score = self.score(0, t, root);
        if score == f64::NEG_INFINITY {
            return Err(Error::Underivable(format!("{} (root {})", g.name(), g.label_name(root))));
        }
        let mut tree = SemanticTree {
            len: t,
            root,
            binary: Vec::with_capacity(t - 1),
            unary: Vec::with_capacity(t),
            terminal: Vec::with_capacity(t),
        };
        // left child is expanded before right
        let mut stack = vec![(0, t, root)];
        while let Some((i, j, a)) = stack.pop() {
            match self.back[self.idx(i, j, a.index())] {
                Back::Unary(k) => {
                    let r = g.unary_rules()[k];
                    tree.unary.push(AnchoredUnary {
                        pos: i,
                        rule: k,
                        child: r.child,
                        parent: r.parent,
                    });
                    tree.terminal.push(AnchoredTerminal { pos: i, label: r.child });
                }
                Back::Binary { split, rule } => {
                    let r = g.binary_rules()[rule];
                    tree.binary.push(AnchoredBinary {
                        start: i,
                        split,
                        end: j,
                        rule,
                        left: r.left,
                        right: r.right,
                        parent: r.parent,
                    });
                    stack.push((split, j, r.right));
                    stack.push((i, split, r.left));
                }
                Back::None => unreachable!("finite cell without a back pointer"),
            }
        }
        tree.normalize();
        Ok((tree, score))
    }
}

/// Best tree rooted at `root`, with its score.
pub fn cky_decode(g: &Grammar, s: &ScoreTables, root: Label) -> Result<(SemanticTree, f64)> {
    Viterbi::new(g, s).tree(g, root)
}
