//! Gold corpora: tokenization, TroFi and MWLB ingestion, validation.

mod format;
mod mwlb;
mod tokenize;
mod trofi;
mod validate;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

pub use format::{CorpusFormat, FormatRegistry, MwlbFormat, TrofiFormat};
pub use mwlb::{load_mwlb, parse_mwlb, write_mwlb, MWLB_HEADER, MWLB_VERSION_LINE};
pub use tokenize::tokenize;
pub use trofi::{focus_stem, load_trofi, parse_trofi, TrofiLoad};
pub use validate::{validate, Mismatch, ValidationReport};

/// A word or punctuation token. `char_span` holds byte offsets into the
/// sentence text, end exclusive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub index: usize,
    pub char_span: (usize, usize),
}

impl Token {
    pub fn is_word(&self) -> bool {
        !crate::normalize::is_punctuation_only(&self.surface)
    }
}

/// Literal vs non-literal usage. Used both for gold labels and predictions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Usage {
    Literal,
    Nonliteral,
}

impl Usage {
    pub fn opposite(self) -> Usage {
        match self {
            Usage::Literal => Usage::Nonliteral,
            Usage::Nonliteral => Usage::Literal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrofiRecord {
    pub id: String,
    pub target_word: String,
    pub sentence: String,
    pub tokens: Vec<Token>,
    pub focus_indices: Vec<usize>,
    pub gold: Usage,
}

/// A Lakoff & Johnson metaphor: a contiguous token range plus the key words
/// inside it. `end` is inclusive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetaphorSpan {
    pub start: usize,
    pub end: usize,
    pub key_indices: Vec<usize>,
}

impl MetaphorSpan {
    pub fn contains(&self, index: usize) -> bool {
        (self.start..=self.end).contains(&index)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MwlbRecord {
    pub id: String,
    pub sentence: String,
    pub tokens: Vec<Token>,
    pub lj_metaphors: Vec<MetaphorSpan>,
    pub conceptual_metaphor: Option<String>,
}

/// The view of a corpus row the rest of the pipeline needs.
pub trait CorpusRecord {
    fn id(&self) -> &str;
    fn sentence(&self) -> &str;
    fn tokens(&self) -> &[Token];
}

impl CorpusRecord for TrofiRecord {
    fn id(&self) -> &str {
        &self.id
    }
    fn sentence(&self) -> &str {
        &self.sentence
    }
    fn tokens(&self) -> &[Token] {
        &self.tokens
    }
}

impl CorpusRecord for MwlbRecord {
    fn id(&self) -> &str {
        &self.id
    }
    fn sentence(&self) -> &str {
        &self.sentence
    }
    fn tokens(&self) -> &[Token] {
        &self.tokens
    }
}

/// A loaded corpus of either kind.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "format", content = "records", rename_all = "lowercase")]
pub enum Corpus {
    Trofi(Vec<TrofiRecord>),
    Mwlb(Vec<MwlbRecord>),
}

impl Corpus {
    pub fn format_name(&self) -> &'static str {
        match self {
            Corpus::Trofi(_) => "trofi",
            Corpus::Mwlb(_) => "mwlb",
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Corpus::Trofi(r) => r.len(),
            Corpus::Mwlb(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn records(&self) -> Vec<&dyn CorpusRecord> {
        match self {
            Corpus::Trofi(r) => r.iter().map(|r| r as &dyn CorpusRecord).collect(),
            Corpus::Mwlb(r) => r.iter().map(|r| r as &dyn CorpusRecord).collect(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("missing required column `{0}`")]
    MissingColumn(String),
    #[error("row `{id}` (line {line}): {message}")]
    InvalidSpan { id: String, line: usize, message: String },
    #[error("unknown corpus format `{0}`")]
    UnknownFormat(String),
}
