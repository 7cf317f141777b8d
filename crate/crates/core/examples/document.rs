//! Splits a short review into sentences, scores each with an (untrained)
//! embedding scorer and aggregates the sentence logits with attention.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use scg::chart::{classify, inside};
use scg::data::{split_document, tokenize};
use scg::grammar::builtin_scg;
use scg::scorer::ScorerParams;
use scg::training::aggregate_document;

fn main() -> scg::Result<()> {
    let g = builtin_scg();
    let review = "The plot drags. But the acting is superb! I would not watch it again.";
    let sentences = split_document(review, 60);
    let vocab: Vec<String> = sentences.iter().flat_map(|s| tokenize(s)).collect();
    let params = ScorerParams::init(&g, &vocab, 16, 0.3, &mut ChaCha8Rng::seed_from_u64(5));

    let (mut logits, mut reps) = (Vec::new(), Vec::new());
    for s in &sentences {
        let tokens = tokenize(s);
        let tables = params.score_sentence(&g, &tokens)?;
        let c = classify(&g, &tables, &inside(&g, &tables))?;
        logits.push((0..c.roots.len()).map(|k| c.logit(k)).collect::<Vec<_>>());
        reps.push(params.sentence_rep(&tokens)?);
        println!("{s:<40} logits {:?}", logits.last().unwrap());
    }
    let doc = aggregate_document(&params, &logits, &reps)?;
    println!("attention {:?}", doc.weights);
    println!("document logits {:?}", doc.logits);
    Ok(())
}
