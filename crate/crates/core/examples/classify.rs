//! Classifies a few sentences with the lexicon scorer and prints each best
//! semantic tree in all three renderings.

use scg::chart::{classify, cky_decode, inside};
use scg::data::tokenize;
use scg::grammar::builtin_scg;
use scg::lexicon::{Lexicon, Preterminal, Source};
use scg::scorer::{LexiconScorer, Scorer};

fn main() -> scg::Result<()> {
    let g = builtin_scg();
    let mut lex = Lexicon::builtin_functional();
    for w in ["good", "funny", "charming"] {
        lex.insert(w, Preterminal::P, Source::Sentiment);
    }
    for w in ["bad", "slow", "boring"] {
        lex.insert(w, Preterminal::N, Source::Sentiment);
    }
    let scorer = LexiconScorer::new(lex, 5.0)?;

    for text in ["not good", "funny but slow", "although boring , charming", "would be good , bad"] {
        let tokens = tokenize(text);
        let s = scorer.score(&g, &tokens)?;
        let c = classify(&g, &s, &inside(&g, &s))?;
        let root = c.best();
        let (tree, score) = cky_decode(&g, &s, root)?;
        println!("{text}");
        for (k, &r) in c.roots.iter().enumerate() {
            println!("  p({}) = {:.4}", g.label_name(r), c.probs[k]);
        }
        println!("  best tree (score {score}): {}", tree.to_bracketed(&g, &tokens));
        println!("{}", tree.ascii(&g, &tokens));
        println!("  {}\n", tree.to_json(&g, &tokens));
    }
    Ok(())
}
