//! Versioned JSON model container.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{LexiconScorer, ScoreTables, Scorer, ScorerParams};
use crate::error::{Error, Result};
use crate::grammar::{builtin_glue, builtin_scg, parse_grammar, Grammar};
use crate::lexicon::{Lexicon, Preterminal, Source};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    Embedding(ScorerParams),
    Lexicon(LexiconScorer),
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    grammar: String,
    grammar_rules: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    grammar_text: Option<String>,
    scorer: ScorerFile,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum ScorerFile {
    Embedding {
        dim: usize,
        num_labels: usize,
        vocabulary: Vec<String>,
        tensors: Vec<TensorFile>,
    },
    Lexicon {
        margin: f64,
        entries: Vec<(String, Preterminal, Source)>,
    },
}

#[derive(Serialize, Deserialize)]
struct TensorFile {
    name: String,
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Scorer for Model {
    fn score<S: AsRef<str>>(&self, g: &Grammar, tokens: &[S]) -> Result<ScoreTables> {
        match self {
            Model::Embedding(p) => p.score(g, tokens),
            Model::Lexicon(l) => l.score(g, tokens),
        }
    }
}

fn is_builtin(g: &Grammar) -> bool {
    match g.name() {
        "scg" => *g == builtin_scg(),
        "glue" => *g == builtin_glue(),
        _ => false,
    }
}

impl Model {
    pub fn to_json(&self, g: &Grammar) -> Result<String> {
        let scorer = match self {
            Model::Embedding(p) => ScorerFile::Embedding {
                dim: p.dim(),
                num_labels: p.num_labels(),
                vocabulary: p.vocab().to_vec(),
                tensors: p
                    .tensors()
                    .into_iter()
                    .map(|(name, shape, data)| TensorFile {
                        name: name.to_string(),
                        shape,
                        data: data.to_vec(),
                    })
                    .collect(),
            },
            Model::Lexicon(l) => ScorerFile::Lexicon {
                margin: l.margin,
                entries: l
                    .lexicon
                    .entries()
                    .into_iter()
                    .map(|(w, e)| (w.to_string(), e.label, e.source))
                    .collect(),
            },
        };
        let file = ModelFile {
            format_version: FORMAT_VERSION,
            grammar: g.name().to_string(),
            grammar_rules: g.num_rules(),
            grammar_text: (!is_builtin(g)).then(|| g.to_text()),
            scorer,
        };
        let mut s = serde_json::to_string(&file)?;
        s.push('\n');
        Ok(s)
    }

    pub fn save(&self, g: &Grammar, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json(g)?).map_err(|e| Error::io(path, e))
    }

    /// Parses a model. With `expected`, the stored grammar must have the
    /// same rule count.
    pub fn from_json(text: &str, expected: Option<&Grammar>) -> Result<(Model, Grammar)> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.format_version != FORMAT_VERSION {
            return Err(Error::Model(format!(
                "unsupported format version {} (expected {FORMAT_VERSION})",
                file.format_version
            )));
        }
        let g = match (&file.grammar_text, file.grammar.as_str()) {
            (Some(text), _) => parse_grammar(text, None)?,
            (None, "scg") => builtin_scg(),
            (None, "glue") => builtin_glue(),
            (None, other) => return Err(Error::Model(format!("unknown grammar `{other}`"))),
        };
        if g.num_rules() != file.grammar_rules {
            return Err(Error::Model(format!(
                "model declares {} rules but grammar `{}` has {}",
                file.grammar_rules,
                g.name(),
                g.num_rules()
            )));
        }
        if let Some(e) = expected {
            if e.num_rules() != file.grammar_rules {
                return Err(Error::Model(format!(
                    "model was trained with {} grammar rules, grammar `{}` has {}",
                    file.grammar_rules,
                    e.name(),
                    e.num_rules()
                )));
            }
        }
        let model = match file.scorer {
            ScorerFile::Lexicon { margin, entries } => {
                let mut lex = Lexicon::new();
                for (w, l, s) in entries {
                    lex.insert(&w, l, s);
                }
                Model::Lexicon(LexiconScorer::new(lex, margin)?)
            }
            ScorerFile::Embedding {
                dim,
                num_labels,
                vocabulary,
                tensors,
            } => {
                if num_labels != g.num_labels() {
                    return Err(Error::Model(format!(
                        "model has {num_labels} labels, grammar has {}",
                        g.num_labels()
                    )));
                }
                let vocab: Vec<&str> = vocabulary.iter().skip(1).map(String::as_str).collect();
                let mut p = ScorerParams::zeros(&g, &vocab, dim);
                if p.vocab() != vocabulary.as_slice() {
                    return Err(Error::Model("vocabulary must start with <unk> and be unique".into()));
                }
                let expected: HashMap<&str, Vec<usize>> = p
                    .tensors()
                    .into_iter()
                    .map(|(n, s, _)| (n, s))
                    .collect();
                if tensors.len() != expected.len() {
                    return Err(Error::Model(format!(
                        "expected {} tensors, found {}",
                        expected.len(),
                        tensors.len()
                    )));
                }
                for t in tensors {
                    let shape = expected
                        .get(t.name.as_str())
                        .ok_or_else(|| Error::Model(format!("unknown tensor `{}`", t.name)))?;
                    let n: usize = t.shape.iter().product();
                    if &t.shape != shape || t.data.len() != n {
                        return Err(Error::Model(format!(
                            "tensor `{}` has shape {:?} ({} values), expected {:?}",
                            t.name,
                            t.shape,
                            t.data.len(),
                            shape
                        )));
                    }
                    *p.tensor_mut(&t.name).expect("known tensor") = t.data;
                }
                Model::Embedding(p)
            }
        };
        Ok((model, g))
    }

    pub fn load(path: impl AsRef<Path>, expected: Option<&Grammar>) -> Result<(Model, Grammar)> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Model::from_json(&text, expected)
    }
}
