//! Builds a grammar from text, reports its diagnostics and parses with it.

use scg::chart::{classify, cky_decode, inside};
use scg::grammar::parse_grammar;
use scg::lexicon::{Lexicon, Preterminal, Source};
use scg::scorer::{LexiconScorer, Scorer};

// Symmetric closure adds the mirrored rules, so `D P -> N` also yields
// `P D -> N`.
const GRAMMAR: &str = "\
@name tiny
label P sentimental preterminal root
label N sentimental preterminal root
label O sentimental preterminal
label D functional preterminal
rule P P -> P
rule N N -> N
rule P O -> P
rule N O -> N
rule O O -> O
rule D P -> N
rule D N -> P
unary P -> P
unary N -> N
unary O -> O
unary D -> D
";

fn main() -> scg::Result<()> {
    let g = parse_grammar(GRAMMAR, None)?;
    println!("{}: {} labels, {} binary, {} unary rules", g.name(), g.num_labels(), g.num_binary(), g.num_unary());
    for d in g.validate() {
        println!("diagnostic: {d}");
    }

    let mut lex = Lexicon::builtin_functional();
    lex.insert("fine", Preterminal::P, Source::Sentiment);
    let scorer = LexiconScorer::new(lex, 5.0)?;
    for tokens in [&["not", "fine"][..], &["fine", "story"][..]] {
        let s = scorer.score(&g, tokens)?;
        let c = classify(&g, &s, &inside(&g, &s))?;
        let (tree, _) = cky_decode(&g, &s, c.best())?;
        println!("{:<12} {}", tokens.join(" "), tree.to_bracketed(&g, tokens));
    }
    print!("\n{}", g.to_text());
    Ok(())
}
