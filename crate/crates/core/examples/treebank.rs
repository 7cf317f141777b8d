//! Reads labeled constituency trees, binarizes them into bracketings and
//! scores predicted bracketings with unlabeled span F1.

use scg::data::{parse_bracketed, to_left_branching_cnf, Skeleton};
use scg::eval::{corpus_tree_f1, unlabeled_tree_f1};

fn main() -> scg::Result<()> {
    let gold_text = [
        "(3 (2 (2 The) (2 story)) (3 (2 is) (4 (3 very) (4 charming))))",
        "(1 (2 It) (1 (1 (2 never) (3 works)) (2 .)))",
        "(2 (2 A) (2 (2 long) (2 film) (2 indeed)))",
    ];
    let mut gold = Vec::new();
    for line in gold_text {
        let tree = parse_bracketed(line)?;
        let k = to_left_branching_cnf(&tree);
        println!("{:<30} {}", tree.leaves().join(" "), k.to_bracketed());
        gold.push(k);
    }
    let predicted: Vec<Skeleton> = gold.iter().map(|k| Skeleton::right_branching(k.len())).collect();
    for (p, g) in predicted.iter().zip(&gold) {
        let s = unlabeled_tree_f1(p, g)?;
        println!("right-branching: P {:.3} R {:.3} F1 {:.3}", s.precision, s.recall, s.f1);
    }
    let total = corpus_tree_f1(predicted.iter().zip(&gold))?;
    println!("corpus F1 (micro) {:.3}", total.f1);
    Ok(())
}
