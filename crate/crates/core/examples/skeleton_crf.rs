//! The unlabeled bracketing distribution: probabilities of all bracketings
//! of a five-token sentence and the per-span marginals.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use scg::chart::{skeleton_inside, skeleton_marginals};
use scg::data::Skeleton;
use scg::grammar::builtin_scg;
use scg::scorer::ScoreTables;

fn main() -> scg::Result<()> {
    let g = builtin_scg();
    let t = 5;
    let s = ScoreTables::random(&g, t, 1.5, &mut ChaCha8Rng::seed_from_u64(9));
    let chart = skeleton_inside(&s);
    let mut total = 0.0;
    for k in Skeleton::enumerate(t) {
        let p = chart.log_prob(&s, &k)?.exp();
        total += p;
        println!("{p:.4}  {}", k.to_bracketed());
    }
    println!("sum over {} bracketings = {total:.15}", Skeleton::enumerate(t).len());

    let mu = skeleton_marginals(&s, &chart);
    println!("\nspan marginals:");
    for w in 2..=t {
        for i in 0..=t - w {
            println!("  ({i}, {}) {:.4}", i + w, mu[s.cell(i, i + w)]);
        }
    }
    Ok(())
}
