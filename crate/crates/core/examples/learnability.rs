//! Trains on a synthetic corpus generated from a planted lexicon and reports
//! held-out root accuracy after every epoch.
//!
//! ```text
//! cargo run --release --example learnability -- [n_train] [epochs]
//! ```

use scg::data::{generate_synthetic, Example, GeneratorConfig};
use scg::grammar::builtin_scg;
use scg::lexicon::{Lexicon, Preterminal, Source};
use scg::training::{init_params, train, TrainConfig};

fn planted() -> Lexicon {
    let mut lex = Lexicon::builtin_functional();
    for w in ["good", "great", "fun", "superb", "charming"] {
        lex.insert(w, Preterminal::P, Source::Sentiment);
    }
    for w in ["bad", "dull", "awful", "boring", "messy"] {
        lex.insert(w, Preterminal::N, Source::Sentiment);
    }
    for w in ["movie", "the", "plot", "actor"] {
        lex.insert(w, Preterminal::O, Source::Stopword);
    }
    lex
}

fn main() -> scg::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(5000, |a| a.parse().expect("n_train"));
    let epochs: usize = args.next().map_or(30, |a| a.parse().expect("epochs"));

    let g = builtin_scg();
    let lex = planted();
    let gen = |n, seed| -> scg::Result<Vec<Example>> {
        let cfg = GeneratorConfig { n, seed, ..Default::default() };
        Ok(generate_synthetic(&g, &lex, &cfg)?
            .into_iter()
            .map(|s| {
                let mut ex = s.example;
                ex.weak = Some(Lexicon::builtin_functional().annotate(&ex.tokens));
                ex
            })
            .collect())
    };
    let train_set = gen(n, 7)?;
    let dev = gen(1000, 8)?;

    let cfg = TrainConfig { epochs, ..Default::default() };
    let params = init_params(&g, &train_set, &cfg);
    let start = std::time::Instant::now();
    train(&g, params, &train_set, Some(&dev), &cfg, |r, _| {
        println!(
            "epoch {:>2}  cls {:.4}  pos {:.4}  dev acc {:.4}  lr {:.4}  {:.1}s",
            r.epoch,
            r.loss_cls,
            r.loss_pos.unwrap_or(f64::NAN),
            r.dev_accuracy.unwrap_or(f64::NAN),
            r.lr,
            start.elapsed().as_secs_f64()
        );
        Ok(())
    })?;
    Ok(())
}
