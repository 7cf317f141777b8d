//! Chart algorithms over anchored rules, all in natural-log space.
//!
//! * [`inside`] sums the potentials of every subtree under each anchored node.
//! * [`classify`] turns the root cells into `p(y | x)`.
//! * [`outside`] and [`rule_marginals`] give expected rule counts, which are
//!   the gradients of `log Z` with respect to the score tables.
//! * [`cky_decode`] finds the best tree for a given root.
//! * [`skeleton_inside`] is the unlabeled bracketing CRF.
//! * [`oracle`] enumerates trees explicitly, for testing the above.

mod cky;
pub mod oracle;
mod skeleton;
mod tree;

pub use cky::{cky_decode, Viterbi};
pub use skeleton::{skeleton_inside, skeleton_marginals, SkeletonChart};
pub use tree::{AnchoredBinary, AnchoredTerminal, AnchoredUnary, SemanticTree};

use crate::error::{Error, Result};
use crate::grammar::{Grammar, Label};
use crate::scorer::ScoreTables;

/// Sentences longer than this are rejected unless the caller raises the cap.
pub const DEFAULT_MAX_LEN: usize = 60;

pub fn check_length(len: usize, cap: usize) -> Result<()> {
    if len == 0 {
        return Err(Error::EmptySentence);
    }
    if len > cap {
        return Err(Error::TooLong { len, cap });
    }
    Ok(())
}

/// Streaming log-sum-exp accumulator.
#[derive(Clone, Copy, Debug)]
pub struct LogAcc {
    max: f64,
    sum: f64,
}

impl Default for LogAcc {
    fn default() -> Self {
        LogAcc {
            max: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }
}

impl LogAcc {
    #[inline]
    pub fn add(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x <= self.max {
            self.sum += (x - self.max).exp();
        } else {
            self.sum = self.sum * (self.max - x).exp() + 1.0;
            self.max = x;
        }
    }

    #[inline]
    pub fn value(&self) -> f64 {
        if self.sum == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}

pub fn logsumexp(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = LogAcc::default();
    xs.into_iter().for_each(|x| acc.add(x));
    acc.value()
}

/// Log inside values per anchored node.
#[derive(Clone, Debug)]
pub struct InsideChart {
    len: usize,
    num_labels: usize,
    log_alpha: Vec<f64>,
    /// `logsumexp` over root labels of the full-span cell.
    pub log_z: f64,
}

impl InsideChart {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, a: Label) -> f64 {
        self.log_alpha[(i * (self.len + 1) + j) * self.num_labels + a.index()]
    }

    #[inline]
    fn at(&self, i: usize, j: usize, a: usize) -> f64 {
        self.log_alpha[(i * (self.len + 1) + j) * self.num_labels + a]
    }

    /// Labels with a finite inside value at `(i, j)`.
    fn finite(&self, i: usize, j: usize) -> Vec<usize> {
        (0..self.num_labels)
            .filter(|&a| self.at(i, j, a) > f64::NEG_INFINITY)
            .collect()
    }

    /// Log partition restricted to a subset of root labels.
    pub fn log_z_over(&self, roots: &[Label]) -> f64 {
        logsumexp(roots.iter().map(|&r| self.get(0, self.len, r)))
    }
}

pub fn inside(g: &Grammar, s: &ScoreTables) -> InsideChart {
    let (t, n) = (s.len(), g.num_labels());
    let mut chart = InsideChart {
        len: t,
        num_labels: n,
        log_alpha: vec![f64::NEG_INFINITY; (t + 1) * (t + 1) * n],
        log_z: f64::NEG_INFINITY,
    };
    let cell = |i: usize, j: usize| (i * (t + 1) + j) * n;

    for i in 0..t {
        let mut acc = vec![LogAcc::default(); n];
        for (k, r) in g.unary_rules().iter().enumerate() {
            if !g.is_preterminal(r.child) {
                continue;
            }
            acc[r.parent.index()].add(s.terminal(i, r.child.index()) + s.unary_rule[k]);
        }
        let base = cell(i, i + 1);
        for a in 0..n {
            let v = acc[a].value();
            if v > f64::NEG_INFINITY {
                chart.log_alpha[base + a] = v + s.label(i, i + 1, a) + s.span(i, i + 1);
            }
        }
    }

    let mut acc = vec![LogAcc::default(); n];
    for w in 2..=t {
        for i in 0..=t - w {
            let j = i + w;
            acc.iter_mut().for_each(|a| *a = LogAcc::default());
            for k in i + 1..j {
                let left = chart.finite(i, k);
                let right = chart.finite(k, j);
                for &b in &left {
                    let ab = chart.at(i, k, b);
                    for &c in &right {
                        let abc = ab + chart.at(k, j, c);
                        for &r in g.pair_rules(Label(b as u8), Label(c as u8)) {
                            let p = g.binary_rules()[r].parent.index();
                            acc[p].add(s.binary_rule[r] + abc);
                        }
                    }
                }
            }
            let base = cell(i, j);
            for a in 0..n {
                let v = acc[a].value();
                if v > f64::NEG_INFINITY {
                    chart.log_alpha[base + a] = v + s.label(i, j, a) + s.span(i, j);
                }
            }
        }
    }
    chart.log_z = chart.log_z_over(g.roots());
    chart
}

/// Class distribution over root labels, with the logit decomposition
/// `logit(A) = s_label(A, x) + s_scm(A, x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Classification {
    pub roots: Vec<Label>,
    pub probs: Vec<f64>,
    pub log_alpha: Vec<f64>,
    /// Recognition score of each root over the full span.
    pub s_label: Vec<f64>,
    /// Composition score: log-sum over the top rule and split of the rule
    /// score and the children's inside values (for one token, over the
    /// unary chains instead).
    pub s_scm: Vec<f64>,
    pub log_z: f64,
}

impl Classification {
    pub fn logit(&self, k: usize) -> f64 {
        self.s_label[k] + self.s_scm[k]
    }

    /// Most probable root; ties go to the earlier root.
    pub fn best(&self) -> Label {
        let mut best = 0;
        for k in 1..self.probs.len() {
            if self.probs[k] > self.probs[best] {
                best = k;
            }
        }
        self.roots[best]
    }

    pub fn prob(&self, l: Label) -> Option<f64> {
        self.roots.iter().position(|&r| r == l).map(|k| self.probs[k])
    }
}

pub fn classify(g: &Grammar, s: &ScoreTables, chart: &InsideChart) -> Result<Classification> {
    if chart.log_z == f64::NEG_INFINITY {
        return Err(Error::Underivable(g.name().to_string()));
    }
    let t = s.len();
    let roots = g.roots().to_vec();
    let mut out = Classification {
        roots: roots.clone(),
        probs: Vec::new(),
        log_alpha: Vec::new(),
        s_label: Vec::new(),
        s_scm: Vec::new(),
        log_z: chart.log_z,
    };
    for &a in &roots {
        let alpha = chart.get(0, t, a);
        let s_label = s.label(0, t, a.index());
        let s_scm = if t == 1 {
            logsumexp(
                g.unary_to(a)
                    .iter()
                    .map(|&k| s.terminal(0, g.unary_rules()[k].child.index()) + s.unary_rule[k]),
            )
        } else {
            let mut acc = LogAcc::default();
            for &r in g.binary_to(a) {
                let rule = g.binary_rules()[r];
                for k in 1..t {
                    acc.add(s.binary_rule[r] + chart.get(0, k, rule.left) + chart.get(k, t, rule.right));
                }
            }
            acc.value()
        };
        debug_assert!(
            alpha == f64::NEG_INFINITY
                || (alpha - (s_label + s.span(0, t) + s_scm)).abs() <= 1e-8 * alpha.abs().max(1.0),
            "inside value disagrees with its logit decomposition"
        );
        out.probs.push((alpha - chart.log_z).exp());
        out.log_alpha.push(alpha);
        out.s_label.push(s_label);
        out.s_scm.push(s_scm);
    }
    Ok(out)
}

/// Log outside values, for trees rooted in a chosen subset of root labels.
#[derive(Clone, Debug)]
pub struct OutsideChart {
    len: usize,
    num_labels: usize,
    log_beta: Vec<f64>,
    /// Log partition over the chosen roots.
    pub log_z: f64,
}

impl OutsideChart {
    #[inline]
    pub fn get(&self, i: usize, j: usize, a: Label) -> f64 {
        self.log_beta[(i * (self.len + 1) + j) * self.num_labels + a.index()]
    }
}

/// Top-down companion of [`inside`]. `roots` selects which full-span labels
/// count as complete trees: all grammar roots for the class-marginal
/// distribution, one label to condition on a gold root.
pub fn outside(g: &Grammar, s: &ScoreTables, chart: &InsideChart, roots: &[Label]) -> OutsideChart {
    let (t, n) = (s.len(), g.num_labels());
    let cell = |i: usize, j: usize| (i * (t + 1) + j) * n;
    let mut acc = vec![LogAcc::default(); (t + 1) * (t + 1) * n];
    for &r in roots {
        acc[cell(0, t) + r.index()].add(0.0);
    }
    let mut beta = vec![f64::NEG_INFINITY; (t + 1) * (t + 1) * n];

    for w in (1..=t).rev() {
        for i in 0..=t - w {
            let j = i + w;
            for a in 0..n {
                beta[cell(i, j) + a] = acc[cell(i, j) + a].value();
            }
            if w == 1 {
                continue;
            }
            for a in 0..n {
                let b_out = beta[cell(i, j) + a];
                if b_out == f64::NEG_INFINITY || chart.at(i, j, a) == f64::NEG_INFINITY {
                    continue;
                }
                let base = b_out + s.label(i, j, a) + s.span(i, j);
                for &r in g.binary_to(Label(a as u8)) {
                    let rule = g.binary_rules()[r];
                    let x = base + s.binary_rule[r];
                    let (lb, rc) = (rule.left.index(), rule.right.index());
                    for k in i + 1..j {
                        let al = chart.at(i, k, lb);
                        let ar = chart.at(k, j, rc);
                        if al == f64::NEG_INFINITY || ar == f64::NEG_INFINITY {
                            continue;
                        }
                        acc[cell(i, k) + lb].add(x + ar);
                        acc[cell(k, j) + rc].add(x + al);
                    }
                }
            }
        }
    }
    OutsideChart {
        len: t,
        num_labels: n,
        log_beta: beta,
        log_z: chart.log_z_over(roots),
    }
}

/// Node marginal `p(A_ij in t)` under the outside chart's root set.
pub fn node_marginal(chart: &InsideChart, out: &OutsideChart, i: usize, j: usize, a: Label) -> f64 {
    let v = chart.get(i, j, a) + out.get(i, j, a) - out.log_z;
    if v == f64::NEG_INFINITY || v.is_nan() {
        0.0
    } else {
        v.exp()
    }
}

/// Marginal of one anchored binary rule `B_ik C_kj -> A_ij`.
pub fn anchored_binary_marginal(
    g: &Grammar,
    s: &ScoreTables,
    chart: &InsideChart,
    out: &OutsideChart,
    rule: usize,
    (i, k, j): (usize, usize, usize),
) -> f64 {
    let r = g.binary_rules()[rule];
    let v = s.binary_score(g, rule, i, j) + chart.get(i, k, r.left) + chart.get(k, j, r.right)
        + out.get(i, j, r.parent)
        - out.log_z;
    if v.is_nan() {
        0.0
    } else {
        v.exp()
    }
}

/// Marginal of the anchored unary rule with index `k` at position `i`,
/// together with its terminal `x_i -> child`.
pub fn anchored_unary_marginal(
    g: &Grammar,
    s: &ScoreTables,
    out: &OutsideChart,
    k: usize,
    i: usize,
) -> f64 {
    let r = g.unary_rules()[k];
    let v = s.terminal(i, r.child.index()) + s.unary_score(g, k, i) + out.get(i, i + 1, r.parent)
        - out.log_z;
    if v.is_nan() {
        0.0
    } else {
        v.exp()
    }
}

/// Expected anchored-rule counts folded onto the score tables: each entry is
/// `d log Z / d entry` for the outside chart's root set.
pub fn rule_marginals(g: &Grammar, s: &ScoreTables, chart: &InsideChart, out: &OutsideChart) -> ScoreTables {
    let (t, n) = (s.len(), g.num_labels());
    let mut m = ScoreTables::zeros(g, t);
    if out.log_z == f64::NEG_INFINITY {
        return m;
    }
    for i in 0..t {
        for (k, r) in g.unary_rules().iter().enumerate() {
            if !g.is_preterminal(r.child) {
                continue;
            }
            let mu = anchored_unary_marginal(g, s, out, k, i);
            if mu == 0.0 {
                continue;
            }
            *m.terminal_mut(i, r.child.index()) += mu;
            m.unary_rule[k] += mu;
        }
    }
    for w in 1..=t {
        for i in 0..=t - w {
            let j = i + w;
            let mut span_total = 0.0;
            for a in 0..n {
                let beta = out.get(i, j, Label(a as u8));
                let alpha = chart.at(i, j, a);
                if beta == f64::NEG_INFINITY || alpha == f64::NEG_INFINITY {
                    continue;
                }
                let node = (alpha + beta - out.log_z).exp();
                *m.label_mut(i, j, a) += node;
                span_total += node;
                if w == 1 {
                    continue;
                }
                let base = beta + s.label(i, j, a) + s.span(i, j) - out.log_z;
                for &r in g.binary_to(Label(a as u8)) {
                    let rule = g.binary_rules()[r];
                    for k in i + 1..j {
                        let al = chart.at(i, k, rule.left.index());
                        let ar = chart.at(k, j, rule.right.index());
                        if al == f64::NEG_INFINITY || ar == f64::NEG_INFINITY {
                            continue;
                        }
                        m.binary_rule[r] += (base + s.binary_rule[r] + al + ar).exp();
                    }
                }
            }
            *m.span_mut(i, j) += span_total;
        }
    }
    m
}

#[cfg(test)]
mod tests;
