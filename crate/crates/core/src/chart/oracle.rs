//! Brute-force tree enumeration, used to check the charts.
//!
//! Every derivation is built explicitly and scored by summing its anchored
//! rules, with no dynamic-programming shortcuts across alternatives. For
//! the widest span the trees are only folded over, never stored, so the
//! per-root totals stay affordable up to about six tokens.

use super::tree::{AnchoredBinary, AnchoredTerminal, AnchoredUnary, SemanticTree};
use crate::error::{Error, Result};
use crate::grammar::{Grammar, Label};
use crate::scorer::ScoreTables;

pub const DEFAULT_CAP: usize = 7;

#[derive(Clone, Copy, Debug)]
enum Back {
    Unary(usize),
    Binary {
        split: usize,
        rule: usize,
        left: usize,
        right: usize,
    },
}

#[derive(Clone, Copy, Debug)]
struct Entry {
    label: Label,
    score: f64,
    back: Back,
}

/// Every subtree of every span up to `max_width`.
struct Lists {
    len: usize,
    cells: Vec<Vec<Entry>>,
}

impl Lists {
    fn get(&self, i: usize, j: usize) -> &[Entry] {
        &self.cells[i * (self.len + 1) + j]
    }

    fn build(g: &Grammar, s: &ScoreTables, max_width: usize) -> Lists {
        let t = s.len();
        let mut lists = Lists {
            len: t,
            cells: vec![Vec::new(); (t + 1) * (t + 1)],
        };
        for i in 0..t {
            let mut cell = Vec::new();
            for (k, r) in g.unary_rules().iter().enumerate() {
                if !g.is_preterminal(r.child) {
                    continue;
                }
                let score = s.unary_score(g, k, i) + s.terminal(i, r.child.index());
                if score > f64::NEG_INFINITY {
                    cell.push(Entry {
                        label: r.parent,
                        score,
                        back: Back::Unary(k),
                    });
                }
            }
            lists.cells[i * (t + 1) + i + 1] = cell;
        }
        for w in 2..=max_width.min(t) {
            for i in 0..=t - w {
                let j = i + w;
                let mut cell = Vec::new();
                combine(g, s, &lists, i, j, |label, score, back| {
                    cell.push(Entry { label, score, back })
                });
                lists.cells[i * (t + 1) + j] = cell;
            }
        }
        lists
    }
}

/// Calls `f` once per derivation over `(i, j)` built from the stored
/// lists of its two children.
fn combine(g: &Grammar, s: &ScoreTables, lists: &Lists, i: usize, j: usize, mut f: impl FnMut(Label, f64, Back)) {
    for k in i + 1..j {
        let (left, right) = (lists.get(i, k), lists.get(k, j));
        for (li, l) in left.iter().enumerate() {
            for (ri, r) in right.iter().enumerate() {
                for &rule in g.pair_rules(l.label, r.label) {
                    let parent = g.binary_rules()[rule].parent;
                    let local = s.binary_score(g, rule, i, j);
                    let score = local + l.score + r.score;
                    if score > f64::NEG_INFINITY {
                        f(
                            parent,
                            score,
                            Back::Binary {
                                split: k,
                                rule,
                                left: li,
                                right: ri,
                            },
                        );
                    }
                }
            }
        }
    }
}

fn check(s: &ScoreTables, cap: usize) -> Result<()> {
    if s.is_empty() {
        return Err(Error::EmptySentence);
    }
    if s.len() > cap {
        return Err(Error::EnumerationCap { len: s.len(), cap });
    }
    Ok(())
}

/// Visits every full-span derivation as `(root label, score, back pointer)`.
fn fold_top(g: &Grammar, s: &ScoreTables, lists: &Lists, mut f: impl FnMut(Label, f64, Back)) {
    let t = s.len();
    if t == 1 {
        for e in lists.get(0, 1) {
            f(e.label, e.score, e.back);
        }
    } else {
        combine(g, s, lists, 0, t, f);
    }
}

fn build_tree(g: &Grammar, lists: &Lists, len: usize, root: Label, back: Back) -> SemanticTree {
    let mut tree = SemanticTree {
        len,
        root,
        binary: Vec::new(),
        unary: Vec::new(),
        terminal: Vec::new(),
    };
    let mut stack = vec![(0, len, back)];
    while let Some((i, j, back)) = stack.pop() {
        match back {
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
            Back::Binary { split, rule, left, right } => {
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
                stack.push((i, split, lists.get(i, split)[left].back));
                stack.push((split, j, lists.get(split, j)[right].back));
            }
        }
    }
    tree.normalize();
    tree
}

/// Every derivation of the sentence with its total score, for any root
/// label (filter on `tree.root` for the grammar's roots).
pub fn enumerate_trees(g: &Grammar, s: &ScoreTables, cap: usize) -> Result<Vec<(SemanticTree, f64)>> {
    check(s, cap)?;
    let t = s.len();
    let lists = Lists::build(g, s, t - 1);
    let mut out = Vec::new();
    fold_top(g, s, &lists, |root, score, back| {
        out.push((build_tree(g, &lists, t, root, back), score));
    });
    Ok(out)
}

/// Per-label totals over all full-span derivations.
#[derive(Clone, Debug, PartialEq)]
pub struct RootTotal {
    pub count: u64,
    /// Best derivation score, `-inf` when there is none.
    pub max: f64,
    /// `log sum exp(score)`, summed with compensation.
    pub log_sum: f64,
}

/// Scores of every subtree over one span, grouped by head label.
type ScoreCell = Vec<Vec<f64>>;

/// Score lists for all spans narrower than the sentence. Each stored score
/// is one explicit subtree: `local + left + right` in that order.
fn score_lists(g: &Grammar, s: &ScoreTables) -> Vec<ScoreCell> {
    let t = s.len();
    let n = g.num_labels();
    let mut cells = vec![vec![Vec::new(); n]; (t + 1) * (t + 1)];
    for i in 0..t {
        let cell = &mut cells[i * (t + 1) + i + 1];
        for (k, r) in g.unary_rules().iter().enumerate() {
            if g.is_preterminal(r.child) {
                let score = s.unary_score(g, k, i) + s.terminal(i, r.child.index());
                if score > f64::NEG_INFINITY {
                    cell[r.parent.index()].push(score);
                }
            }
        }
    }
    for w in 2..t {
        for i in 0..=t - w {
            let j = i + w;
            let mut cell: ScoreCell = vec![Vec::new(); n];
            for k in i + 1..j {
                let (left, right) = (&cells[i * (t + 1) + k], &cells[k * (t + 1) + j]);
                for a in g.labels() {
                    for b in g.labels() {
                        let (ls, rs) = (&left[a.index()], &right[b.index()]);
                        if ls.is_empty() || rs.is_empty() {
                            continue;
                        }
                        for &rule in g.pair_rules(a, b) {
                            let local = s.binary_score(g, rule, i, j);
                            let out = &mut cell[g.binary_rules()[rule].parent.index()];
                            for &l in ls {
                                let base = local + l;
                                out.extend(rs.iter().map(|&r| base + r).filter(|&x| x > f64::NEG_INFINITY));
                            }
                        }
                    }
                }
            }
            cells[i * (t + 1) + j] = cell;
        }
    }
    cells
}

/// Compensated (Neumaier) running sum.
#[derive(Clone, Copy, Default)]
struct Sum {
    sum: f64,
    comp: f64,
}

impl Sum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

fn max_of(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// For one left subtree against a run of right subtrees: the best tree
/// score `base + r` and the summed weights `w_base * w_r`, visiting every
/// pair. Four independent lanes keep the loop fast; the resulting sum is
/// accurate to a few hundred ulps even for the longest runs.
fn lanes(base: f64, w_base: f64, rs: &[f64], ws: &[f64]) -> (f64, f64) {
    let mut m = [f64::NEG_INFINITY; 4];
    let mut acc = [0.0f64; 4];
    let (rc, wc) = (rs.chunks_exact(4), ws.chunks_exact(4));
    let (r_tail, w_tail) = (rc.remainder(), wc.remainder());
    for (r, w) in rc.zip(wc) {
        for q in 0..4 {
            let x = base + r[q];
            if x > m[q] {
                m[q] = x;
            }
            acc[q] += w_base * w[q];
        }
    }
    for (&r, &w) in r_tail.iter().zip(w_tail) {
        let x = base + r;
        if x > m[0] {
            m[0] = x;
        }
        acc[0] += w_base * w;
    }
    let best = m.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (best, (acc[0] + acc[1]) + (acc[2] + acc[3]))
}

/// Counts, best scores and log-sum-exp totals per full-span label, indexed
/// by label id.
///
/// Every full-span tree is visited once. Its weight is the product of the
/// exponentiated (shifted) scores of its top rule and its two stored
/// subtrees; the weights are summed with compensation, per split, then the
/// split totals are combined in log space.
pub fn root_totals(g: &Grammar, s: &ScoreTables, cap: usize) -> Result<Vec<RootTotal>> {
    check(s, cap)?;
    let n = g.num_labels();
    let t = s.len();
    let cells = score_lists(g, s);
    let mut count = vec![0u64; n];
    let mut max = vec![f64::NEG_INFINITY; n];
    // per-root list of (shift, compensated sum) pieces
    let mut pieces: Vec<Vec<(f64, f64)>> = vec![Vec::new(); n];

    if t == 1 {
        for (k, r) in g.unary_rules().iter().enumerate() {
            if g.is_preterminal(r.child) {
                let score = s.unary_score(g, k, 0) + s.terminal(0, r.child.index());
                if score > f64::NEG_INFINITY {
                    let a = r.parent.index();
                    count[a] += 1;
                    max[a] = max[a].max(score);
                    pieces[a].push((score, 1.0));
                }
            }
        }
    } else {
        let local: Vec<f64> = (0..g.num_binary()).map(|r| s.binary_score(g, r, 0, t)).collect();
        let m_local = max_of(&local);
        let w_local: Vec<f64> = local.iter().map(|&x| (x - m_local).exp()).collect();
        for k in 1..t {
            let (left, right) = (&cells[k], &cells[k * (t + 1) + t]);
            let m_left = left.iter().map(|v| max_of(v)).fold(f64::NEG_INFINITY, f64::max);
            let m_right = right.iter().map(|v| max_of(v)).fold(f64::NEG_INFINITY, f64::max);
            if m_left == f64::NEG_INFINITY || m_right == f64::NEG_INFINITY || m_local == f64::NEG_INFINITY {
                continue;
            }
            let w_left: Vec<Vec<f64>> = left
                .iter()
                .map(|v| v.iter().map(|&x| (x - m_left).exp()).collect())
                .collect();
            let w_right: Vec<Vec<f64>> = right
                .iter()
                .map(|v| v.iter().map(|&x| (x - m_right).exp()).collect())
                .collect();
            let mut sums = vec![Sum::default(); n];
            for a in g.labels() {
                let ls = &left[a.index()];
                for b in g.labels() {
                    let (rs, wr) = (&right[b.index()], &w_right[b.index()]);
                    if ls.is_empty() || rs.is_empty() {
                        continue;
                    }
                    for &rule in g.pair_rules(a, b) {
                        let p = g.binary_rules()[rule].parent.index();
                        if local[rule] == f64::NEG_INFINITY {
                            continue;
                        }
                        count[p] += (ls.len() * rs.len()) as u64;
                        let mut best = max[p];
                        for (&l, &wl) in ls.iter().zip(&w_left[a.index()]) {
                            let base = local[rule] + l;
                            let (m, w) = lanes(base, w_local[rule] * wl, rs, wr);
                            best = best.max(m);
                            sums[p].add(w);
                        }
                        max[p] = best;
                    }
                }
            }
            let shift = m_local + m_left + m_right;
            for (a, sum) in sums.iter().enumerate() {
                if sum.value() > 0.0 {
                    pieces[a].push((shift, sum.value()));
                }
            }
        }
    }
    Ok((0..n)
        .map(|a| {
            let log_sum = if pieces[a].is_empty() {
                f64::NEG_INFINITY
            } else {
                let m = pieces[a].iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
                let mut total = Sum::default();
                for &(shift, v) in &pieces[a] {
                    total.add(v * (shift - m).exp());
                }
                m + total.value().ln()
            };
            RootTotal {
                count: count[a],
                max: max[a],
                log_sum,
            }
        })
        .collect())
}
