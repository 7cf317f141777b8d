use super::{ScoreTables, Scorer};
use crate::error::{Error, Result};
use crate::grammar::{Grammar, LabelKind};
use crate::lexicon::{Lexicon, Preterminal};

/// Static scorer that trusts a lexicon.
///
/// A word's lexicon label scores `+margin` and every other preterminal
/// `-margin`; unknown words are read as `O`. Label and span scores are zero.
///
/// Two rule classes cost `-margin`: cancelling a functional preterminal
/// (`D -> O` and friends), and binary rules whose right child is a
/// functional preterminal. The second one makes negators, blockers and
/// priority modifiers take scope over what follows them, which breaks the
/// tie the commutative rules leave between `(good (but bad))` and
/// `((good but) bad)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LexiconScorer {
    pub lexicon: Lexicon,
    pub margin: f64,
}

impl LexiconScorer {
    pub fn new(lexicon: Lexicon, margin: f64) -> Result<Self> {
        if !(margin > 0.0 && margin.is_finite()) {
            return Err(Error::Config(format!("margin must be positive, got {margin}")));
        }
        Ok(LexiconScorer { lexicon, margin })
    }
}

/// Whether a binary rule attaches a functional preterminal on the right.
pub(crate) fn is_right_functional(g: &Grammar, right: crate::grammar::Label) -> bool {
    g.is_preterminal(right) && g.label_info(right).kind == LabelKind::Functional
}

impl Scorer for LexiconScorer {
    fn score<S: AsRef<str>>(&self, g: &Grammar, tokens: &[S]) -> Result<ScoreTables> {
        if tokens.is_empty() {
            return Err(Error::EmptySentence);
        }
        let mut s = ScoreTables::neutral(g, tokens.len());
        let neutral = Preterminal::O.in_grammar(g);
        for (i, tok) in tokens.iter().enumerate() {
            let target = self
                .lexicon
                .lookup(tok.as_ref())
                .and_then(|p| p.in_grammar(g))
                .or(neutral);
            for &a in g.preterminals() {
                *s.terminal_mut(i, a.index()) = if Some(a) == target {
                    self.margin
                } else {
                    -self.margin
                };
            }
        }
        for r in g.binary_rules() {
            if is_right_functional(g, r.right) {
                s.binary_rule[r.id] = -self.margin;
            }
        }
        for (k, r) in g.unary_rules().iter().enumerate() {
            if r.child != r.parent {
                s.unary_rule[k] = -self.margin;
            }
        }
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::builtin_scg;

    #[test]
    fn terminal_scores() {
        let g = builtin_scg();
        let sc = LexiconScorer::new(Lexicon::builtin_functional(), 5.0).unwrap();
        let s = sc.score(&g, &["not", "movie"]).unwrap();
        for &a in g.preterminals() {
            let want = if g.label_name(a) == "D" { 5.0 } else { -5.0 };
            assert_eq!(s.terminal(0, a.index()), want);
            let want = if g.label_name(a) == "O" { 5.0 } else { -5.0 };
            assert_eq!(s.terminal(1, a.index()), want);
        }
        assert!(s.label.iter().all(|&x| x == 0.0));
        assert!(s.span.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn rejects_non_positive_margin() {
        assert!(LexiconScorer::new(Lexicon::new(), 0.0).is_err());
    }
}
