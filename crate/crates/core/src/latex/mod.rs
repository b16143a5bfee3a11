//! LaTeX math and plain infix parsing into [`ExprTree`](crate::ExprTree).
//!
//! [`parse_latex`] splits its input at top-level relations and yields one
//! normalized tree per segment. Constructs outside the grammar (integrals,
//! sums, matrices, unknown commands) stay in the tree as
//! [`Head::Unsupported`](crate::Head::Unsupported) markers so the corpus
//! builder can decide what to do with them.

mod lexer;
mod normalize;
mod parser;
mod plain;

pub use lexer::{lex, LatexTokenStream, Lexeme, LexemeKind};
pub use normalize::{normalize, Normalizer};
pub use parser::{parse_latex, ParseOutcome};
pub use plain::parse_plain;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LatexError {
    #[error("unbalanced braces at byte {0}")]
    UnbalancedBraces(usize),
    #[error("empty input")]
    EmptyInput,
    #[error("no parseable segment; first failure at byte {0}")]
    TotallyUnparseable(usize),
    #[error("syntax error at byte {0}")]
    SyntaxError(usize),
}
