//! Trains a tiny embedding scorer, saves it, reloads it and checks that the
//! reloaded model predicts identically.

use scg::data::parse_dataset;
use scg::eval::predict;
use scg::grammar::builtin_scg;
use scg::lexicon::Lexicon;
use scg::scorer::Model;
use scg::training::{init_params, train, TrainConfig};

fn main() -> scg::Result<()> {
    let g = builtin_scg();
    let mut data = parse_dataset(
        "positive\tgood\nnegative\tbad\nnegative\tnot good\npositive\tnot bad\npositive\tbad but good\n",
        "inline",
    )?;
    let lex = Lexicon::builtin_functional();
    for ex in &mut data {
        ex.weak = Some(lex.annotate(&ex.tokens));
    }
    let cfg = TrainConfig { epochs: 150, batch_size: 1, embed_dim: 8, ..Default::default() };
    let (params, report) = train(&g, init_params(&g, &data, &cfg), &data, None, &cfg, |_, _| Ok(()))?;
    print!("{}", report.to_json_lines().lines().last().unwrap_or_default());
    println!();

    let path = std::env::temp_dir().join("scg-example-model.json");
    let model = Model::Embedding(params);
    model.save(&g, &path)?;
    let (reloaded, g2) = Model::load(&path, Some(&g))?;
    assert_eq!(model, reloaded);
    for ex in &data {
        let a = predict(&g, &model, &ex.tokens, 60)?;
        let b = predict(&g2, &reloaded, &ex.tokens, 60)?;
        assert_eq!(a.tree, b.tree);
        println!("{:<14} gold {:<8} predicted {}", ex.tokens.join(" "), ex.polarity.as_str(), g.label_name(a.root));
    }
    std::fs::remove_file(&path).ok();
    Ok(())
}
