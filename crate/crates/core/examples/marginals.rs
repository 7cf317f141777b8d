//! Inside-outside on random score tables: the partition function, the
//! expected count of every anchored binary rule, and the same quantities
//! conditioned on the root.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use scg::chart::{inside, outside, rule_marginals};
use scg::grammar::builtin_scg;
use scg::scorer::ScoreTables;

fn main() {
    let g = builtin_scg();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let s = ScoreTables::random(&g, 5, 1.0, &mut rng);
    let chart = inside(&g, &s);
    println!("log Z = {:.6}", chart.log_z);

    for roots in [g.roots().to_vec(), vec![g.label("N").unwrap()]] {
        let names: Vec<&str> = roots.iter().map(|&r| g.label_name(r)).collect();
        let out = outside(&g, &s, &chart, &roots);
        let mu = rule_marginals(&g, &s, &chart, &out);
        let mut rules: Vec<(usize, f64)> = mu.binary_rule.iter().copied().enumerate().collect();
        rules.sort_by(|a, b| b.1.total_cmp(&a.1));
        println!("\nroots {names:?}: expected binary rules = {:.6}", mu.binary_rule.iter().sum::<f64>());
        for (r, m) in rules.iter().take(5) {
            println!("  {:<14} {m:.4}", g.display_binary(&g.binary_rules()[*r]));
        }
    }
}
