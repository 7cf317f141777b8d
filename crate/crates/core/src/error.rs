use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown label `{0}`")]
    UnknownLabel(String),

    #[error("label id {0} does not belong to grammar `{1}`")]
    LabelMismatch(usize, String),

    #[error("grammar line {line}: {msg}")]
    GrammarSyntax { line: usize, msg: String },

    #[error("invalid grammar: {0}")]
    InvalidGrammar(String),

    #[error("{path}:{line}: {msg}")]
    Format {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("bracketed tree at byte {pos}: {msg}")]
    Bracketed { pos: usize, msg: String },

    #[error("empty sentence")]
    EmptySentence,

    #[error("sentence of {len} tokens exceeds the length cap of {cap}")]
    TooLong { len: usize, cap: usize },

    #[error("sentence underivable under grammar `{0}`")]
    Underivable(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("enumeration is capped at {cap} tokens, got {len}")]
    EnumerationCap { len: usize, cap: usize },

    #[error("invalid semantic tree: {0}")]
    InvalidTree(String),

    #[error("invalid skeleton: {0}")]
    InvalidSkeleton(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("model: {0}")]
    Model(String),

    #[error("synthetic generation failed: {0}")]
    Generation(String),

    #[error("{0}: {1}")]
    Io(PathBuf, #[source] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable snake_case tag for machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::UnknownLabel(_) => "unknown_label",
            Error::LabelMismatch(..) => "label_mismatch",
            Error::GrammarSyntax { .. } => "grammar_syntax",
            Error::InvalidGrammar(_) => "invalid_grammar",
            Error::Format { .. } => "format",
            Error::Bracketed { .. } => "bracketed",
            Error::EmptySentence => "empty_sentence",
            Error::TooLong { .. } => "too_long",
            Error::Underivable(_) => "underivable",
            Error::Shape(_) => "shape",
            Error::EnumerationCap { .. } => "enumeration_cap",
            Error::InvalidTree(_) => "invalid_tree",
            Error::InvalidSkeleton(_) => "invalid_skeleton",
            Error::Config(_) => "config",
            Error::Model(_) => "model",
            Error::Generation(_) => "generation",
            Error::Io(..) => "io",
            Error::Json(_) => "json",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, err: std::io::Error) -> Self {
        Error::Io(path.into(), err)
    }
}
