//! Token-sequence corpus: library filtering, replace/split augmentation,
//! variable canonicalization, deduplication and the v1 file format.

mod augment;
mod build;
mod format;

pub use augment::{augment_replace, augment_split, mark_unsupported, prune_markers, split_pieces};
pub use build::{
    build_corpus, canonicalize_variables, canonicalize_variables_as, AugmentPolicy, CorpusConfig, CorpusStats,
};
pub use format::{read_corpus, read_corpus_vocab, write_corpus, HEADER_PREFIX};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::Traversal;

/// How a sample came out of augmentation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Augmentation {
    None,
    Replaced,
    Split,
}

impl Augmentation {
    pub fn as_str(self) -> &'static str {
        match self {
            Augmentation::None => "none",
            Augmentation::Replaced => "replaced",
            Augmentation::Split => "split",
        }
    }

    pub fn parse(s: &str) -> Option<Augmentation> {
        match s {
            "none" => Some(Augmentation::None),
            "replaced" => Some(Augmentation::Replaced),
            "split" => Some(Augmentation::Split),
            _ => None,
        }
    }
}

/// One corpus line: a complete traversal and where it came from.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CorpusSample {
    pub traversal: Traversal,
    pub page_id: u64,
    pub augmentation: Augmentation,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("expected header `#mathcorpus v1 vocab=<name>`, found {0:?}")]
    FormatVersionMismatch(String),
    #[error("token {0:?} is not in the library")]
    VocabMismatch(String),
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("placeholder {0:?} is not a terminal token of the library")]
    Placeholder(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
