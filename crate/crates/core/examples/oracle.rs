//! Cross-checks the inside chart and the Viterbi decoder against brute-force
//! enumeration of every semantic tree.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use scg::chart::oracle::{enumerate_trees, root_totals, DEFAULT_CAP};
use scg::chart::{inside, Viterbi};
use scg::grammar::{builtin_glue, builtin_scg};
use scg::scorer::ScoreTables;

fn main() -> scg::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for g in [builtin_scg(), builtin_glue()] {
        println!("grammar {}", g.name());
        for t in 1..=6 {
            let s = ScoreTables::random(&g, t, 1.0, &mut rng);
            let chart = inside(&g, &s);
            let totals = root_totals(&g, &s, DEFAULT_CAP)?;
            let vit = Viterbi::new(&g, &s);
            for &r in g.roots() {
                let tot = &totals[r.index()];
                let (_, best) = vit.tree(&g, r)?;
                println!(
                    "  T={t} root {}: {:>9} trees  inside {:+.12}  enumerated {:+.12}  best {} {}",
                    g.label_name(r),
                    tot.count,
                    chart.get(0, t, r),
                    tot.log_sum,
                    best,
                    if best == tot.max { "(exact)" } else { "(MISMATCH)" }
                );
            }
        }
    }

    // a short sentence is small enough to list every tree
    let g = builtin_scg();
    let s = ScoreTables::random(&g, 2, 1.0, &mut rng);
    let tokens = ["w0", "w1"];
    let trees = enumerate_trees(&g, &s, DEFAULT_CAP)?;
    println!("\nall {} derivations of a two-token sentence (any label):", trees.len());
    for (tree, score) in trees.iter().filter(|(t, _)| g.is_root(t.root)) {
        println!("  {score:+.4}  {}", tree.to_bracketed(&g, &tokens));
    }
    Ok(())
}
