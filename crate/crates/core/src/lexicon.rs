//! Word-level preterminal lexicons and weak preterminal annotation.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grammar::{Grammar, Label};

/// The seven labels a word may carry directly.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Preterminal {
    N,
    P,
    O,
    D,
    I,
    Riser,
    Reducer,
}

impl Preterminal {
    pub const ALL: [Preterminal; 7] = [
        Preterminal::N,
        Preterminal::P,
        Preterminal::O,
        Preterminal::D,
        Preterminal::I,
        Preterminal::Riser,
        Preterminal::Reducer,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preterminal::N => "N",
            Preterminal::P => "P",
            Preterminal::O => "O",
            Preterminal::D => "D",
            Preterminal::I => "I",
            Preterminal::Riser => "+",
            Preterminal::Reducer => "-",
        }
    }

    /// The grammar's label with this name, if the grammar declares it as a
    /// preterminal.
    pub fn in_grammar(self, g: &Grammar) -> Option<Label> {
        g.label(self.name()).ok().filter(|&l| g.is_preterminal(l))
    }
}

impl fmt::Display for Preterminal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preterminal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preterminal::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::UnknownLabel(s.to_string()))
    }
}

/// Where an entry came from. Earlier variants win on conflict.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Source {
    Functional,
    Sentiment,
    Stopword,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Entry {
    pub label: Preterminal,
    pub source: Source,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Lexicon {
    entries: HashMap<String, Entry>,
}

const RISERS: [&str; 5] = ["but", "however", "yet", "whereas", "still"];
const REDUCERS: [&str; 6] = [
    "although",
    "though",
    "despite",
    "regardless",
    "nevertheless",
    "nonetheless",
];
const BLOCKERS: [&str; 6] = ["could", "should", "would", "ought", "supposed", "if"];
const NEGATORS: [&str; 30] = [
    "no", "not", "n't", "neither", "nor", "never", "none", "lack", "without", "cannot", "aint",
    "arent", "barely", "cant", "couldnt", "didnt", "doesnt", "dont", "hardly", "havent", "few",
    "isnt", "merely", "nothing", "nobody", "shouldnt", "wasnt", "werent", "wont", "wouldnt",
];

impl Lexicon {
    pub fn new() -> Self {
        Lexicon::default()
    }

    /// The hand-built functional lexicon: priority risers and reducers,
    /// irrealis blockers and negators.
    pub fn builtin_functional() -> Self {
        let mut lex = Lexicon::new();
        for (words, label) in [
            (&RISERS[..], Preterminal::Riser),
            (&REDUCERS[..], Preterminal::Reducer),
            (&BLOCKERS[..], Preterminal::I),
            (&NEGATORS[..], Preterminal::D),
        ] {
            for w in words {
                lex.insert(w, label, Source::Functional);
            }
        }
        lex
    }

    /// Inserts unless an entry of equal or higher precedence exists.
    /// Returns whether the entry was stored.
    pub fn insert(&mut self, word: &str, label: Preterminal, source: Source) -> bool {
        let key = word.to_lowercase();
        match self.entries.get(&key) {
            Some(e) if e.source <= source => false,
            _ => {
                self.entries.insert(key, Entry { label, source });
                true
            }
        }
    }

    /// Merges `other` into `self` under the source precedence rule.
    pub fn merge(&mut self, other: &Lexicon) {
        let mut keys: Vec<&String> = other.entries.keys().collect();
        keys.sort();
        for k in keys {
            let e = other.entries[k];
            self.insert(k, e.label, e.source);
        }
    }

    pub fn lookup(&self, word: &str) -> Option<Preterminal> {
        self.entry(word).map(|e| e.label)
    }

    pub fn entry(&self, word: &str) -> Option<Entry> {
        if let Some(e) = self.entries.get(word) {
            return Some(*e);
        }
        self.entries.get(&word.to_lowercase()).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries sorted by word.
    pub fn entries(&self) -> BTreeMap<&str, Entry> {
        self.entries.iter().map(|(k, v)| (k.as_str(), *v)).collect()
    }

    /// Words per preterminal.
    pub fn by_label(&self) -> BTreeMap<Preterminal, Vec<String>> {
        let mut out: BTreeMap<Preterminal, Vec<String>> = BTreeMap::new();
        for (w, e) in self.entries() {
            out.entry(e.label).or_default().push(w.to_string());
        }
        out
    }

    /// Reads a lexicon file. Sentiment and functional files hold
    /// `word<TAB>label` lines; stopword files may hold bare words (label `O`).
    pub fn load(path: impl AsRef<Path>, source: Source) -> Result<(Lexicon, Vec<String>)> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Lexicon::parse(&text, source, &path.display().to_string())
    }

    /// Parses lexicon text; returns the lexicon and warning diagnostics.
    pub fn parse(text: &str, source: Source, origin: &str) -> Result<(Lexicon, Vec<String>)> {
        let mut lex = Lexicon::new();
        let mut warnings = Vec::new();
        let err = |line: usize, msg: String| Error::Format {
            path: origin.to_string(),
            line,
            msg,
        };
        for (no, raw) in text.lines().enumerate() {
            let line_no = no + 1;
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (word, label) = match line.split_once('\t') {
                Some((w, l)) => {
                    let label: Preterminal = l.trim().parse().map_err(|_| {
                        err(line_no, format!("`{}` is not a preterminal label", l.trim()))
                    })?;
                    (w, label)
                }
                None if source == Source::Stopword => (line, Preterminal::O),
                None => return Err(err(line_no, "expected `word<TAB>label`".into())),
            };
            let word = word.trim();
            if word.is_empty() || word.contains(char::is_whitespace) {
                return Err(err(line_no, format!("malformed word `{word}`")));
            }
            if lex.entries.contains_key(&word.to_lowercase()) {
                warnings.push(format!(
                    "{origin}:{line_no}: duplicate entry `{word}` ignored, keeping the first"
                ));
                continue;
            }
            lex.insert(word, label, source);
        }
        Ok((lex, warnings))
    }

    /// Writes `word<TAB>label` lines sorted by word.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (w, e) in self.entries() {
            out.push_str(w);
            out.push('\t');
            out.push_str(e.label.name());
            out.push('\n');
        }
        out
    }

    pub fn annotate<S: AsRef<str>>(&self, tokens: &[S]) -> WeakAnnotation {
        let labels = tokens
            .iter()
            .enumerate()
            .filter_map(|(i, t)| self.lookup(t.as_ref()).map(|l| (i, l)))
            .collect();
        WeakAnnotation { labels }
    }
}

/// Preterminal labels for the subset of positions the lexicon covers.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeakAnnotation {
    pub labels: BTreeMap<usize, Preterminal>,
}

impl WeakAnnotation {
    pub fn positions(&self) -> impl Iterator<Item = usize> + '_ {
        self.labels.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, pos: usize) -> Option<Preterminal> {
        self.labels.get(&pos).copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn functional_lexicon_contents() {
        let lex = Lexicon::builtin_functional();
        assert_eq!(lex.len(), 47);
        assert_eq!(lex.lookup("but"), Some(Preterminal::Riser));
        assert_eq!(lex.lookup("although"), Some(Preterminal::Reducer));
        assert_eq!(lex.lookup("would"), Some(Preterminal::I));
        assert_eq!(lex.lookup("n't"), Some(Preterminal::D));
        let counts: Vec<usize> = lex.by_label().values().map(Vec::len).collect();
        // D, I, +, - in enum order
        assert_eq!(counts, [30, 6, 5, 6]);
    }

    #[test]
    fn load_sentiment_tsv() {
        let (lex, warn) = Lexicon::parse("good\tP\nbad\tN\n", Source::Sentiment, "t").unwrap();
        assert!(warn.is_empty());
        assert_eq!(lex.lookup("good"), Some(Preterminal::P));
        assert_eq!(lex.lookup("bad"), Some(Preterminal::N));
    }

    #[test]
    fn functional_wins_over_sentiment() {
        let mut lex = Lexicon::builtin_functional();
        let (user, _) = Lexicon::parse("but\tO\n", Source::Sentiment, "t").unwrap();
        lex.merge(&user);
        assert_eq!(lex.lookup("but"), Some(Preterminal::Riser));

        let mut lex = user.clone();
        lex.merge(&Lexicon::builtin_functional());
        assert_eq!(lex.lookup("but"), Some(Preterminal::Riser));
    }

    #[test]
    fn space_separated_line_is_rejected() {
        let e = Lexicon::parse("good P\n", Source::Sentiment, "lex.tsv").unwrap_err();
        assert!(matches!(e, Error::Format { line: 1, .. }), "{e}");
    }

    #[test]
    fn bad_label_is_rejected() {
        let e = Lexicon::parse("ok\tP\ngreat\tP+\n", Source::Sentiment, "t").unwrap_err();
        assert!(matches!(e, Error::Format { line: 2, .. }), "{e}");
    }

    #[test]
    fn duplicate_keeps_first_with_warning() {
        let (lex, warn) = Lexicon::parse("fun\tP\nfun\tN\n", Source::Sentiment, "t").unwrap();
        assert_eq!(lex.lookup("fun"), Some(Preterminal::P));
        assert_eq!(warn.len(), 1);
    }

    #[test]
    fn stopwords_default_to_neutral() {
        let (lex, _) = Lexicon::parse("the\na\n", Source::Stopword, "t").unwrap();
        assert_eq!(lex.lookup("the"), Some(Preterminal::O));
    }

    fn with(words: &[(&str, Preterminal)]) -> Lexicon {
        let mut lex = Lexicon::builtin_functional();
        for (w, l) in words {
            lex.insert(w, *l, Source::Sentiment);
        }
        lex
    }

    #[test]
    fn annotate_examples() {
        let lex = with(&[("good", Preterminal::P)]);
        let a = lex.annotate(&["not", "good"]);
        assert_eq!(a.positions().collect::<Vec<_>>(), [0, 1]);
        assert_eq!(a.get(0), Some(Preterminal::D));
        assert_eq!(a.get(1), Some(Preterminal::P));

        assert!(lex.annotate(&["the", "movie"]).is_empty());

        let lex = with(&[("fun", Preterminal::P)]);
        let a = lex.annotate(&["But", "fun"]);
        assert_eq!(a.get(0), Some(Preterminal::Riser));
        assert_eq!(a.get(1), Some(Preterminal::P));
    }

    proptest! {
        #[test]
        fn annotate_is_position_local(tokens in proptest::collection::vec("[a-z']{1,6}", 0..12)) {
            let lex = with(&[("good", Preterminal::P), ("bad", Preterminal::N)]);
            let a = lex.annotate(&tokens);
            prop_assert!(a.len() <= tokens.len());
            for (i, t) in tokens.iter().enumerate() {
                prop_assert_eq!(a.get(i), lex.lookup(t));
                prop_assert_eq!(a.get(i), lex.annotate(&[t]).get(0));
            }
        }
    }
}
