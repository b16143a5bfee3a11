//! Tokens, libraries, expression trees and their pre-order encoding.
//!
//! Every other module speaks these types. A [`Traversal`] is the interchange
//! form: the corpus stores it, the language model predicts it and the search
//! samples it.

mod library;
mod ops;
mod traversal;
mod tree;

pub use library::{Library, Token, TokenKind};
pub use ops::Operator;
pub use traversal::{
    dangling_after, is_complete, is_valid_prefix, traversal_to_tree, tree_to_traversal, Traversal,
};
pub use tree::{ExprTree, Head};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExprError {
    #[error("unknown token {0:?}")]
    UnknownToken(String),
    #[error("token {token:?} expects {expected} children, found {found}")]
    ArityMismatch { token: String, expected: usize, found: usize },
    #[error("unsupported construct {0:?} cannot be encoded")]
    UnsupportedMarker(String),
    #[error("traversal is incomplete")]
    IncompleteTraversal,
    #[error("traversal closes before its end (at position {position})")]
    InvalidPrefix { position: usize },
    #[error("token {0:?} has no numeric semantics")]
    Unevaluable(String),
    #[error("invalid library: {0}")]
    InvalidLibrary(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unbound variable {0:?}")]
    UnboundVariable(String),
    #[error("node {0:?} has no numeric semantics")]
    Unevaluable(String),
}

/// Result of a numeric evaluation. Domain errors are values so batches can
/// count them without unwinding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Eval<T> {
    Value(T),
    Invalid,
}

impl<T: Copy> Eval<T> {
    pub fn value(self) -> Option<T> {
        match self {
            Eval::Value(v) => Some(v),
            Eval::Invalid => None,
        }
    }

    pub fn is_invalid(self) -> bool {
        matches!(self, Eval::Invalid)
    }
}
