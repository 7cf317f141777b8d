//! Samples a small synthetic corpus from a planted lexicon and shows the
//! gold semantic trees next to the sentences.

use scg::data::{generate_synthetic, GeneratorConfig};
use scg::grammar::builtin_scg;
use scg::lexicon::{Lexicon, Preterminal, Source};

fn main() -> scg::Result<()> {
    let g = builtin_scg();
    let mut planted = Lexicon::builtin_functional();
    for (w, p) in [("good", Preterminal::P), ("bad", Preterminal::N), ("film", Preterminal::O)] {
        planted.insert(w, p, Source::Sentiment);
    }
    let cfg = GeneratorConfig { n: 8, seed: 11, max_depth: 4, p_stop: 0.3, ..Default::default() };
    for ex in generate_synthetic(&g, &planted, &cfg)? {
        let tokens = &ex.example.tokens;
        println!("{:<9} {}", ex.example.polarity.as_str(), tokens.join(" "));
        println!("          {}", ex.tree.to_bracketed(&g, tokens));
    }
    Ok(())
}
