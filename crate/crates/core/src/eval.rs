//! Accuracy and unlabeled bracketing F1.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::chart::{check_length, classify, inside, Classification, SemanticTree, Viterbi};
use crate::data::{Example, Polarity, Skeleton};
use crate::error::{Error, Result};
use crate::grammar::{Grammar, Label};
use crate::scorer::Scorer;

/// Exact-match fraction.
pub fn accuracy<T: PartialEq>(predictions: &[T], golds: &[T]) -> Result<f64> {
    if predictions.len() != golds.len() {
        return Err(Error::Shape(format!(
            "{} predictions for {} gold labels",
            predictions.len(),
            golds.len()
        )));
    }
    if golds.is_empty() {
        return Err(Error::Config("accuracy of an empty set".into()));
    }
    let hits = predictions.iter().zip(golds).filter(|(p, g)| p == g).count();
    Ok(hits as f64 / golds.len() as f64)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct TreeScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Span-match counts, summed over a corpus for micro-averaging.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SpanCounts {
    pub matched: usize,
    pub predicted: usize,
    pub gold: usize,
}

impl SpanCounts {
    pub fn of(predicted: &Skeleton, gold: &Skeleton) -> Result<SpanCounts> {
        if predicted.len() != gold.len() {
            return Err(Error::Shape(format!(
                "predicted skeleton over {} tokens, gold over {}",
                predicted.len(),
                gold.len()
            )));
        }
        Ok(SpanCounts {
            matched: predicted.spans().intersection(gold.spans()).count(),
            predicted: predicted.spans().len(),
            gold: gold.spans().len(),
        })
    }

    pub fn add(&mut self, other: SpanCounts) {
        self.matched += other.matched;
        self.predicted += other.predicted;
        self.gold += other.gold;
    }

    pub fn score(&self) -> TreeScore {
        // a single-token sentence has no width >= 2 spans on either side: a
        // perfect (vacuous) match
        if self.predicted == 0 && self.gold == 0 {
            return TreeScore {
                precision: 1.0,
                recall: 1.0,
                f1: 1.0,
            };
        }
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(self.matched, self.predicted);
        let recall = ratio(self.matched, self.gold);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        TreeScore { precision, recall, f1 }
    }
}

/// Precision, recall and F1 over width >= 2 spans, the full span included.
pub fn unlabeled_tree_f1(predicted: &Skeleton, gold: &Skeleton) -> Result<TreeScore> {
    Ok(SpanCounts::of(predicted, gold)?.score())
}

/// Micro-averaged F1 over `(predicted, gold)` pairs.
pub fn corpus_tree_f1<'a>(pairs: impl IntoIterator<Item = (&'a Skeleton, &'a Skeleton)>) -> Result<TreeScore> {
    let mut total = SpanCounts::default();
    for (p, g) in pairs {
        total.add(SpanCounts::of(p, g)?);
    }
    Ok(total.score())
}

/// Decision for one sentence: the most probable root and the best tree
/// under it.
#[derive(Clone, Debug)]
pub struct Prediction {
    pub root: Label,
    pub classification: Classification,
    pub tree: SemanticTree,
    pub tree_score: f64,
}

impl Prediction {
    pub fn polarity(&self, g: &Grammar) -> Option<Polarity> {
        Polarity::from_label(g, self.root)
    }
}

pub fn predict<Sc: Scorer + ?Sized, S: AsRef<str>>(
    g: &Grammar,
    scorer: &Sc,
    tokens: &[S],
    max_len: usize,
) -> Result<Prediction> {
    check_length(tokens.len(), max_len)?;
    let s = scorer.score(g, tokens)?;
    let classification = classify(g, &s, &inside(g, &s))?;
    let root = classification.best();
    let (tree, tree_score) = Viterbi::new(g, &s).tree(g, root)?;
    Ok(Prediction {
        root,
        classification,
        tree,
        tree_score,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    /// Over the examples that were not skipped.
    pub accuracy: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tree_precision: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tree_recall: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tree_f1: Option<f64>,
    pub n_examples: usize,
    /// Underivable or over the length cap.
    pub n_skipped: usize,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }

    /// Aligned `metric  value` table.
    pub fn to_table(&self) -> String {
        let mut rows = vec![("accuracy", format!("{:.4}", self.accuracy))];
        for (name, v) in [
            ("tree_precision", self.tree_precision),
            ("tree_recall", self.tree_recall),
            ("tree_f1", self.tree_f1),
        ] {
            if let Some(v) = v {
                rows.push((name, format!("{v:.4}")));
            }
        }
        rows.push(("n_examples", self.n_examples.to_string()));
        rows.push(("n_skipped", self.n_skipped.to_string()));
        let w = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        let mut out = String::new();
        for (k, v) in rows {
            let _ = writeln!(out, "{k:<w$}  {v:>10}");
        }
        out
    }
}

/// Classifies and decodes every example; tree metrics are reported only
/// when gold skeletons are given (aligned by index).
pub fn evaluate<Sc: Scorer + Sync + ?Sized>(
    g: &Grammar,
    scorer: &Sc,
    examples: &[Example],
    gold_skeletons: Option<&[Skeleton]>,
    max_len: usize,
) -> Result<EvalReport> {
    if let Some(sk) = gold_skeletons {
        if sk.len() != examples.len() {
            return Err(Error::Shape(format!(
                "{} gold trees for {} examples",
                sk.len(),
                examples.len()
            )));
        }
        if let Some(i) = (0..examples.len()).find(|&i| sk[i].len() != examples[i].tokens.len()) {
            return Err(Error::Shape(format!(
                "example {i}: gold tree has {} leaves, sentence has {} tokens",
                sk[i].len(),
                examples[i].tokens.len()
            )));
        }
    }
    let results: Vec<Option<Prediction>> = examples
        .par_iter()
        .map(|ex| predict(g, scorer, &ex.tokens, max_len).ok())
        .collect();

    let mut hits = 0;
    let mut n = 0;
    let mut spans = SpanCounts::default();
    for (i, (ex, pred)) in examples.iter().zip(&results).enumerate() {
        let Some(pred) = pred else { continue };
        n += 1;
        if pred.polarity(g) == Some(ex.polarity) {
            hits += 1;
        }
        if let Some(sk) = gold_skeletons {
            spans.add(SpanCounts::of(&pred.tree.skeleton(), &sk[i])?);
        }
    }
    let tree = gold_skeletons.map(|_| spans.score());
    Ok(EvalReport {
        accuracy: if n == 0 { 0.0 } else { hits as f64 / n as f64 },
        tree_precision: tree.map(|t| t.precision),
        tree_recall: tree.map(|t| t.recall),
        tree_f1: tree.map(|t| t.f1),
        n_examples: examples.len(),
        n_skipped: examples.len() - n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::builtin_scg;
    use crate::lexicon::{Lexicon, Preterminal, Source};
    use crate::scorer::LexiconScorer;

    #[test]
    fn accuracy_cases() {
        use Polarity::*;
        assert_eq!(accuracy(&[Positive, Negative], &[Positive, Negative]).unwrap(), 1.0);
        assert_eq!(accuracy(&[Positive, Negative], &[Negative, Positive]).unwrap(), 0.0);
        let p = [Positive, Positive, Negative, Negative];
        let g = [Positive, Positive, Negative, Positive];
        assert_eq!(accuracy(&p, &g).unwrap(), 0.75);
        assert!(accuracy(&p[..3], &g).is_err());
    }

    #[test]
    fn left_versus_right_branching() {
        let l = Skeleton::left_branching(4);
        let r = Skeleton::right_branching(4);
        let s = unlabeled_tree_f1(&l, &r).unwrap();
        assert_eq!(s.precision, 1.0 / 3.0);
        assert_eq!(s.recall, 1.0 / 3.0);
        assert!((s.f1 - 1.0 / 3.0).abs() < 1e-15);
        let same = unlabeled_tree_f1(&l, &l).unwrap();
        assert_eq!((same.precision, same.recall, same.f1), (1.0, 1.0, 1.0));
        assert!(unlabeled_tree_f1(&l, &Skeleton::left_branching(3)).is_err());
    }

    #[test]
    fn two_tokens_always_match() {
        let k = Skeleton::left_branching(2);
        assert_eq!(unlabeled_tree_f1(&k, &Skeleton::right_branching(2)).unwrap().f1, 1.0);
    }

    #[test]
    fn micro_average_ignores_order() {
        let all5 = Skeleton::enumerate(5);
        let pairs: Vec<(&Skeleton, &Skeleton)> = all5.iter().zip(all5.iter().rev()).collect();
        let a = corpus_tree_f1(pairs.iter().copied()).unwrap();
        let b = corpus_tree_f1(pairs.iter().rev().copied()).unwrap();
        assert_eq!(a, b);
        for (p, g) in &pairs {
            let x = unlabeled_tree_f1(p, g).unwrap();
            let y = unlabeled_tree_f1(g, p).unwrap();
            assert_eq!(x.precision, y.recall);
            assert_eq!(x.f1, y.f1);
        }
    }

    #[test]
    fn report_formats() {
        let g = builtin_scg();
        let mut lex = Lexicon::builtin_functional();
        lex.insert("good", Preterminal::P, Source::Sentiment);
        lex.insert("bad", Preterminal::N, Source::Sentiment);
        let sc = LexiconScorer::new(lex, 5.0).unwrap();
        let data = crate::data::parse_dataset("negative\tnot good\npositive\tgood\nnegative\tbad\n", "t").unwrap();
        let r = evaluate(&g, &sc, &data, None, 60).unwrap();
        assert_eq!(r.accuracy, 1.0);
        assert!(!r.to_json().contains("tree_f1"));
        let sk = vec![Skeleton::left_branching(2), Skeleton::left_branching(1), Skeleton::left_branching(1)];
        let r = evaluate(&g, &sc, &data, Some(&sk), 60).unwrap();
        assert_eq!(r.tree_f1, Some(1.0));
        assert!(r.to_table().contains("tree_f1"));
        let r = evaluate(&g, &sc, &data, None, 1).unwrap();
        assert_eq!(r.n_skipped, 1);
    }
}
