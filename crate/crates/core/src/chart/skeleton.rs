use super::LogAcc;
use crate::data::Skeleton;
use crate::error::{Error, Result};
use crate::scorer::ScoreTables;

/// Inside chart of the unlabeled bracketing CRF, where a skeleton `k` has
/// potential `exp(sum of span[i][j] over (i, j) in k)`.
#[derive(Clone, Debug)]
pub struct SkeletonChart {
    len: usize,
    log_inside: Vec<f64>,
    pub log_z: f64,
}

impl SkeletonChart {
    fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.len + 1) + j
    }

    pub fn inside(&self, i: usize, j: usize) -> f64 {
        self.log_inside[self.idx(i, j)]
    }

    /// `log r(k | x)`.
    pub fn log_prob(&self, s: &ScoreTables, k: &Skeleton) -> Result<f64> {
        if k.len() != self.len || s.len() != self.len {
            return Err(Error::Shape(format!(
                "skeleton over {} tokens, chart over {}",
                k.len(),
                self.len
            )));
        }
        let total: f64 = k.spans().iter().map(|&(i, j)| s.span(i, j)).sum();
        Ok(total - self.log_z)
    }
}

pub fn skeleton_inside(s: &ScoreTables) -> SkeletonChart {
    let t = s.len();
    let mut c = SkeletonChart {
        len: t,
        log_inside: vec![f64::NEG_INFINITY; (t + 1) * (t + 1)],
        log_z: f64::NEG_INFINITY,
    };
    for i in 0..t {
        let x = c.idx(i, i + 1);
        c.log_inside[x] = 0.0;
    }
    for w in 2..=t {
        for i in 0..=t - w {
            let j = i + w;
            let mut acc = LogAcc::default();
            for k in i + 1..j {
                acc.add(c.inside(i, k) + c.inside(k, j));
            }
            let x = c.idx(i, j);
            c.log_inside[x] = acc.value() + s.span(i, j);
        }
    }
    if t > 0 {
        c.log_z = c.inside(0, t);
    }
    c
}

/// Span marginals `p((i, j) in k | x)`, indexed like [`ScoreTables::span`];
/// these are the gradients of `log Z'` with respect to the span scores.
/// Width-1 entries are zero because those spans carry no potential.
pub fn skeleton_marginals(s: &ScoreTables, chart: &SkeletonChart) -> Vec<f64> {
    let t = s.len();
    let idx = |i: usize, j: usize| i * (t + 1) + j;
    let mut outside = vec![LogAcc::default(); (t + 1) * (t + 1)];
    let mut marg = vec![0.0; (t + 1) * (t + 1)];
    if t < 2 {
        return marg;
    }
    outside[idx(0, t)].add(0.0);
    for w in (2..=t).rev() {
        for i in 0..=t - w {
            let j = i + w;
            let out = outside[idx(i, j)].value();
            if out == f64::NEG_INFINITY {
                continue;
            }
            marg[idx(i, j)] = (out + chart.inside(i, j) - chart.log_z).exp();
            let base = out + s.span(i, j);
            for k in i + 1..j {
                let (l, r) = (chart.inside(i, k), chart.inside(k, j));
                outside[idx(i, k)].add(base + r);
                outside[idx(k, j)].add(base + l);
            }
        }
    }
    marg
}
