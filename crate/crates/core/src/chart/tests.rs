use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::oracle::{enumerate_trees, root_totals, DEFAULT_CAP};
use super::*;
use crate::data::Skeleton;
use crate::grammar::{builtin_glue, builtin_scg, parse_grammar};
use crate::lexicon::{Lexicon, Preterminal, Source};
use crate::scorer::{LexiconScorer, Scorer};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn logsumexp_is_stable() {
    assert_eq!(logsumexp([]), f64::NEG_INFINITY);
    assert_eq!(logsumexp([f64::NEG_INFINITY, 2.0]), 2.0);
    let v = logsumexp([1000.0, 1000.0]);
    assert!((v - (1000.0 + 2f64.ln())).abs() < 1e-12);
    let v = logsumexp([-1000.0, -1001.0, -999.5]);
    let want = -999.5 + ((-0.5f64).exp() + (-1.5f64).exp() + 1.0).ln();
    assert!((v - want).abs() < 1e-12);
}

#[test]
fn single_token_zero_scores() {
    let g = builtin_scg();
    let s = ScoreTables::neutral(&g, 1);
    let c = inside(&g, &s);
    let o = g.label("O").unwrap();
    assert!((c.get(0, 1, o) - 5f64.ln()).abs() < 1e-12);
    assert_eq!(c.get(0, 1, g.label("P+").unwrap()), f64::NEG_INFINITY);
}

#[test]
fn inside_matches_enumeration() {
    let mut r = rng(11);
    for g in [builtin_scg(), builtin_glue()] {
        for t in 1..=4 {
            for _ in 0..5 {
                let s = ScoreTables::random(&g, t, 1.0, &mut r);
                let c = inside(&g, &s);
                let totals = root_totals(&g, &s, DEFAULT_CAP).unwrap();
                for a in g.labels() {
                    let want = totals[a.index()].log_sum;
                    let got = c.get(0, t, a);
                    if want == f64::NEG_INFINITY {
                        assert_eq!(got, want);
                    } else {
                        assert!(rel(got.exp(), want.exp()) < 1e-9, "{} T={t}", g.name());
                    }
                }
            }
        }
    }
}

#[test]
fn glue_counts() {
    let g = builtin_glue();
    let s = ScoreTables::neutral(&g, 3);
    let totals = root_totals(&g, &s, DEFAULT_CAP).unwrap();
    // two bracketings, three labels on each of the five nodes
    let all: u64 = totals.iter().map(|t| t.count).sum();
    assert_eq!(all, 2 * 3u64.pow(5));
    let trees = enumerate_trees(&g, &s, DEFAULT_CAP).unwrap();
    assert_eq!(trees.len() as u64, all);
}

#[test]
fn single_token_derivation_counts() {
    let g = builtin_scg();
    let s = ScoreTables::neutral(&g, 1);
    let totals = root_totals(&g, &s, DEFAULT_CAP).unwrap();
    for a in g.labels() {
        assert_eq!(totals[a.index()].count as usize, g.unary_to(a).len());
    }
}

#[test]
fn enumeration_is_capped() {
    let g = builtin_glue();
    let s = ScoreTables::neutral(&g, 8);
    assert!(matches!(root_totals(&g, &s, DEFAULT_CAP), Err(crate::Error::EnumerationCap { .. })));
}

#[test]
fn classification_is_normalized_and_decomposes() {
    let mut r = rng(5);
    for g in [builtin_scg(), builtin_glue()] {
        for t in 1..=6 {
            let s = ScoreTables::random(&g, t, 2.0, &mut r);
            let c = classify(&g, &s, &inside(&g, &s)).unwrap();
            assert!((c.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for k in 0..c.roots.len() {
                let lhs = c.log_alpha[k] - s.span(0, t) - s.label(0, t, c.roots[k].index());
                assert!((lhs - c.s_scm[k]).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn zero_scores_are_uninformative() {
    let g = builtin_scg();
    for t in 1..=5 {
        let s = ScoreTables::neutral(&g, t);
        let c = classify(&g, &s, &inside(&g, &s)).unwrap();
        for p in &c.probs {
            assert!((p - 0.5).abs() < 1e-12);
        }
    }
}

#[test]
fn full_span_shift_cancels() {
    let g = builtin_scg();
    let mut s = ScoreTables::random(&g, 4, 1.0, &mut rng(2));
    let before = classify(&g, &s, &inside(&g, &s)).unwrap();
    *s.span_mut(0, 4) += 3.7;
    let after = classify(&g, &s, &inside(&g, &s)).unwrap();
    for (a, b) in before.probs.iter().zip(&after.probs) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn underivable_sentence() {
    let g = parse_grammar(
        "label P sentimental root\nlabel N sentimental root\nlabel O sentimental preterminal\nrule O O -> O\nunary O -> O\n",
        None,
    )
    .unwrap();
    let s = ScoreTables::neutral(&g, 3);
    let c = inside(&g, &s);
    assert_eq!(c.log_z, f64::NEG_INFINITY);
    assert!(matches!(classify(&g, &s, &c), Err(crate::Error::Underivable(_))));
    assert!(cky_decode(&g, &s, g.label("P").unwrap()).is_err());
}

#[test]
fn outside_initialization() {
    let g = builtin_scg();
    let s = ScoreTables::random(&g, 3, 1.0, &mut rng(3));
    let c = inside(&g, &s);
    let o = outside(&g, &s, &c, g.roots());
    assert_eq!(o.get(0, 3, g.label("P").unwrap()), 0.0);
    assert_eq!(o.get(0, 3, g.label("O").unwrap()), f64::NEG_INFINITY);
}

/// Finite-difference gradient of `log Z` over `roots`.
fn fd(g: &Grammar, s: &ScoreTables, roots: &[Label], entry: usize) -> f64 {
    let h = 1e-5;
    let eval = |d: f64| {
        let mut s = s.clone();
        *s.entries_mut().nth(entry).unwrap() += d;
        inside(g, &s).log_z_over(roots)
    };
    (eval(h) - eval(-h)) / (2.0 * h)
}

#[test]
fn marginals_are_gradients_of_log_z() {
    let mut r = rng(17);
    for g in [builtin_scg(), builtin_glue()] {
        for t in 1..=4 {
            let s = ScoreTables::random(&g, t, 1.0, &mut r);
            let c = inside(&g, &s);
            for roots in [g.roots().to_vec(), vec![g.roots()[0]]] {
                let o = outside(&g, &s, &c, &roots);
                let m = rule_marginals(&g, &s, &c, &o);
                for (e, &mu) in m.entries().enumerate() {
                    let x = *s.entries().nth(e).unwrap();
                    if !x.is_finite() {
                        assert_eq!(mu, 0.0);
                        continue;
                    }
                    let want = fd(&g, &s, &roots, e);
                    assert!((mu - want).abs() < 1e-5, "{} T={t} entry {e}: {mu} vs {want}", g.name());
                }
            }
        }
    }
}

#[test]
fn marginals_match_enumerated_expectations() {
    let g = builtin_scg();
    let s = ScoreTables::random(&g, 4, 1.0, &mut rng(23));
    let c = inside(&g, &s);
    let trees = enumerate_trees(&g, &s, DEFAULT_CAP).unwrap();
    for roots in [g.roots().to_vec(), vec![g.label("N").unwrap()]] {
        let o = outside(&g, &s, &c, &roots);
        let m = rule_marginals(&g, &s, &c, &o);
        let mut want = ScoreTables::zeros(&g, 4);
        let kept: Vec<_> = trees.iter().filter(|(t, _)| roots.contains(&t.root)).collect();
        let z = logsumexp(kept.iter().map(|(_, sc)| *sc));
        for (tree, sc) in kept {
            let p = (sc - z).exp();
            for b in &tree.binary {
                want.binary_rule[b.rule] += p;
                *want.label_mut(b.start, b.end, b.parent.index()) += p;
                *want.span_mut(b.start, b.end) += p;
            }
            for u in &tree.unary {
                want.unary_rule[u.rule] += p;
                *want.label_mut(u.pos, u.pos + 1, u.parent.index()) += p;
                *want.span_mut(u.pos, u.pos + 1) += p;
                *want.terminal_mut(u.pos, u.child.index()) += p;
            }
        }
        for (a, b) in m.entries().zip(want.entries()) {
            assert!((a - b).abs() < 1e-9);
        }
        let binary_total: f64 = m.binary_rule.iter().sum();
        assert!((binary_total - 3.0).abs() < 1e-10);
        assert!(m.label.iter().chain(&m.span).all(|&x| (0.0..=1.0 + 1e-12).contains(&x)));
        // node marginals at width one sum to one per position
        for i in 0..4 {
            let total: f64 = g.labels().map(|a| node_marginal(&c, &o, i, i + 1, a)).sum();
            assert!((total - 1.0).abs() < 1e-10);
        }
    }
}

#[test]
fn blocked_rule_has_zero_marginal() {
    let g = builtin_scg();
    let mut s = ScoreTables::random(&g, 4, 1.0, &mut rng(4));
    let dp = g.binary_rule_by_names("D", "P", "N").unwrap().id;
    s.binary_rule[dp] = f64::NEG_INFINITY;
    let c = inside(&g, &s);
    let o = outside(&g, &s, &c, g.roots());
    let m = rule_marginals(&g, &s, &c, &o);
    assert_eq!(m.binary_rule[dp], 0.0);
    for i in 0..4 {
        for k in i + 1..4 {
            for j in k + 1..=4 {
                assert_eq!(anchored_binary_marginal(&g, &s, &c, &o, dp, (i, k, j)), 0.0);
            }
        }
    }
}

#[test]
fn cky_is_optimal() {
    let mut r = rng(29);
    for g in [builtin_scg(), builtin_glue()] {
        for t in 1..=4 {
            let s = ScoreTables::random(&g, t, 1.0, &mut r);
            let totals = root_totals(&g, &s, DEFAULT_CAP).unwrap();
            let c = classify(&g, &s, &inside(&g, &s)).unwrap();
            for (k, &root) in g.roots().iter().enumerate() {
                let (tree, score) = cky_decode(&g, &s, root).unwrap();
                tree.validate(&g).unwrap();
                assert_eq!(tree.root, root);
                assert_eq!(score, totals[root.index()].max);
                assert_eq!(tree.score(&g, &s), score);
                assert!((score - c.log_z).exp() <= c.probs[k] + 1e-12);
            }
        }
    }
}

fn demo_lexicon() -> Lexicon {
    let mut lex = Lexicon::builtin_functional();
    lex.insert("good", Preterminal::P, Source::Sentiment);
    lex.insert("bad", Preterminal::N, Source::Sentiment);
    lex
}

#[test]
fn not_good_is_negative() {
    let g = builtin_scg();
    let sc = LexiconScorer::new(demo_lexicon(), 5.0).unwrap();
    let s = sc.score(&g, &["not", "good"]).unwrap();
    let n = g.label("N").unwrap();
    let c = classify(&g, &s, &inside(&g, &s)).unwrap();
    assert_eq!(c.best(), n);
    let (tree, _) = cky_decode(&g, &s, n).unwrap();
    assert_eq!(tree.to_bracketed(&g, &["not", "good"]), "(N (D not) (P good))");
    assert_eq!(tree.binary[0].rule, g.binary_rule_by_names("D", "P", "N").unwrap().id);

    // the cancelled reading is one of only two competing derivations and loses
    let trees = enumerate_trees(&g, &s, DEFAULT_CAP).unwrap();
    let best_p = trees
        .iter()
        .filter(|(t, _)| g.label_name(t.root) == "P")
        .map(|(_, sc)| *sc)
        .fold(f64::NEG_INFINITY, f64::max);
    let best_n = trees
        .iter()
        .filter(|(t, _)| t.root == n)
        .map(|(_, sc)| *sc)
        .fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(best_n, 10.0);
    assert_eq!(best_p, 5.0);
}

#[test]
fn tree_renderings() {
    let g = builtin_scg();
    let sc = LexiconScorer::new(demo_lexicon(), 5.0).unwrap();
    let toks = ["not", "good"];
    let s = sc.score(&g, &toks).unwrap();
    let p = g.label("P").unwrap();
    let (tree, _) = cky_decode(&g, &s, p).unwrap();
    assert_eq!(tree.to_bracketed(&g, &toks), "(P (O (D not)) (P good))");
    assert_eq!(tree.ascii(&g, &toks), "P\n  O\n    D\n      not\n  P\n    good\n");
    let (back, words) = SemanticTree::from_json(&g, &tree.to_json(&g, &toks)).unwrap();
    assert_eq!(back, tree);
    assert_eq!(words, toks);

    let single = cky_decode(&g, &sc.score(&g, &["bad"]).unwrap(), g.label("N").unwrap()).unwrap().0;
    assert_eq!(single.to_bracketed(&g, &["bad"]), "(N bad)");
}

#[test]
fn tree_validation_rejects_broken_trees() {
    let g = builtin_scg();
    let s = ScoreTables::random(&g, 3, 1.0, &mut rng(8));
    let (tree, _) = cky_decode(&g, &s, g.label("P").unwrap()).unwrap();
    let mut t = tree.clone();
    t.unary.pop();
    assert!(t.validate(&g).is_err());
    let mut t = tree.clone();
    t.root = g.label("N").unwrap();
    assert!(t.validate(&g).is_err());
    let mut t = tree.clone();
    t.binary[0].parent = g.label("O").unwrap();
    assert!(t.validate(&g).is_err());
    let mut t = tree;
    t.terminal[0].label = g.label("P+").unwrap();
    assert!(t.validate(&g).is_err());
}

#[test]
fn skeleton_crf() {
    let g = builtin_scg();
    let s = ScoreTables::random(&g, 2, 1.0, &mut rng(1));
    let c = skeleton_inside(&s);
    assert!(c.log_prob(&s, &Skeleton::left_branching(2)).unwrap().abs() < 1e-15);

    for t in 1..=6 {
        let s = ScoreTables::random(&g, t, 1.0, &mut rng(t as u64));
        let c = skeleton_inside(&s);
        let total: f64 = Skeleton::enumerate(t)
            .iter()
            .map(|k| c.log_prob(&s, k).unwrap().exp())
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    let s = ScoreTables::neutral(&g, 4);
    let c = skeleton_inside(&s);
    for k in Skeleton::enumerate(4) {
        assert!((c.log_prob(&s, &k).unwrap().exp() - 0.2).abs() < 1e-12);
    }
    assert!(c.log_prob(&s, &Skeleton::left_branching(3)).is_err());
}

#[test]
fn skeleton_marginals_are_gradients() {
    let g = builtin_glue();
    let s = ScoreTables::random(&g, 5, 1.0, &mut rng(12));
    let c = skeleton_inside(&s);
    let m = skeleton_marginals(&s, &c);
    let h = 1e-5;
    for i in 0..5 {
        for j in i + 1..=5 {
            let shift = |d: f64| {
                let mut s = s.clone();
                *s.span_mut(i, j) += d;
                skeleton_inside(&s).log_z
            };
            let want = (shift(h) - shift(-h)) / (2.0 * h);
            assert!((m[s.cell(i, j)] - want).abs() < 1e-8, "({i}, {j})");
        }
    }
    assert!((m[s.cell(0, 5)] - 1.0).abs() < 1e-12);
}

#[test]
fn length_check() {
    assert!(check_length(0, 60).is_err());
    assert!(check_length(60, 60).is_ok());
    assert!(matches!(check_length(61, 60), Err(crate::Error::TooLong { len: 61, cap: 60 })));
}
