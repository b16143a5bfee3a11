//! Mathematical expression corpora from MediaWiki dumps, a recurrent
//! mathematical language model over expression tokens, and neural-guided
//! symbolic regression that uses the language model as a logit-level prior.
//!
//! The numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! at the crate root fix the scalar to `f64`, which is what the weight format
//! stores.

pub mod corpus;
pub mod dsr;
pub mod expr;
pub mod latex;
pub mod mlm;
pub mod nn;
mod scalar;
pub mod wiki;

pub use expr::{Eval, ExprError, ExprTree, Head, Library, Token, TokenKind, Traversal};
pub use scalar::Scalar;

/// The language model over `f64` weights.
pub type Mlm = mlm::MlmModel<f64>;
/// The search controller over `f64` weights.
pub type DsrController = dsr::Controller<f64>;
/// Per-step language-model hidden state over `f64`.
pub type MlmState = mlm::MlmState<f64>;
/// Minibatch gradients over `f64`.
pub type BatchGradients = mlm::BatchGradients<f64>;
