//! Sentiment composition grammar with latent semantic trees.
//!
//! A sentence is classified by summing over every semantic tree the grammar
//! licenses for it, and explained by decoding the best tree for the chosen
//! label:
//!
//! ```
//! use scg::chart::{classify, cky_decode, inside};
//! use scg::grammar::builtin_scg;
//! use scg::lexicon::{Lexicon, Preterminal, Source};
//! use scg::scorer::{LexiconScorer, Scorer};
//!
//! let g = builtin_scg();
//! let mut lex = Lexicon::builtin_functional();
//! lex.insert("good", Preterminal::P, Source::Sentiment);
//! let scorer = LexiconScorer::new(lex, 5.0).unwrap();
//!
//! let tokens = ["not", "good"];
//! let s = scorer.score(&g, &tokens).unwrap();
//! let c = classify(&g, &s, &inside(&g, &s)).unwrap();
//! assert_eq!(g.label_name(c.best()), "N");
//!
//! let (tree, _) = cky_decode(&g, &s, c.best()).unwrap();
//! assert_eq!(tree.to_bracketed(&g, &tokens), "(N (D not) (P good))");
//! ```

pub mod chart;
pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
pub mod grammar;
pub mod lexicon;
pub mod scorer;
pub mod training;

pub use error::{Error, Result};
