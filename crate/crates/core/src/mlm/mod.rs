//! Recurrent next-token model over a [`Library`] vocabulary.
//!
//! Input index `V` is the internal begin-of-sequence marker; output logits
//! cover exactly the `V` library tokens, so logit `i` is token `i`. There is
//! no end marker: a sequence ends when its traversal is complete.

mod io;
mod train;

pub use io::{load, save, MAGIC};
pub use train::{gradients, train, train_with, Batch, BatchGradients, TrainConfig};

use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::expr::dangling_after;
use crate::nn::{self, GruShape, Input};
use crate::{Library, Scalar, Traversal};

#[derive(Debug, Error)]
pub enum MlmError {
    #[error("token index {index} out of range for a vocabulary of {vocab}")]
    IndexOutOfRange { index: usize, vocab: usize },
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("unsupported weight file: {0}")]
    FormatVersion(String),
    #[error("model vocabulary does not match library: {0}")]
    VocabMismatch(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Hidden state of the recurrent cell.
#[derive(Debug, Clone, PartialEq)]
pub struct MlmState<T>(pub Vec<T>);

/// Parameters in one flat vector, in file order: embedding `E`
/// (`(V+1) x d_emb`), cell weights, `W_out` (`H x V`), `b_out` (`V`).
#[derive(Debug, Clone, PartialEq)]
pub struct MlmModel<T> {
    vocab: Library,
    d_emb: usize,
    hidden: usize,
    pub params: Vec<T>,
}

/// Sampled sequence; `truncated` means `max_len` was hit before completion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    pub traversal: Traversal,
    pub truncated: bool,
}

pub(crate) fn param_count(v: usize, d_emb: usize, hidden: usize) -> usize {
    let cell = GruShape { input: d_emb, hidden };
    (v + 1) * d_emb + cell.param_count() + hidden * v + v
}

impl<T: Scalar> MlmModel<T> {
    /// Uniform init scaled by fan-in; the output layer starts at zero so a
    /// fresh model predicts the uniform distribution.
    pub fn init(vocab: &Library, d_emb: usize, hidden: usize, seed: u64) -> Result<Self, MlmError> {
        if d_emb == 0 || hidden == 0 || vocab.is_empty() {
            return Err(MlmError::InvalidConfig(
                "d_emb, hidden and vocabulary size must be at least 1".into(),
            ));
        }
        let mut model = MlmModel {
            vocab: vocab.clone(),
            d_emb,
            hidden,
            params: vec![T::zero(); param_count(vocab.len(), d_emb, hidden)],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let emb_end = model.cell_offset();
        let cell_end = model.out_offset();
        nn::uniform_init(&mut model.params[..emb_end], 1.0 / (d_emb as f64).sqrt(), &mut rng);
        nn::uniform_init(&mut model.params[emb_end..cell_end], 1.0 / (hidden as f64).sqrt(), &mut rng);
        Ok(model)
    }

    pub(crate) fn from_parts(vocab: Library, d_emb: usize, hidden: usize, params: Vec<T>) -> Self {
        debug_assert_eq!(params.len(), param_count(vocab.len(), d_emb, hidden));
        MlmModel { vocab, d_emb, hidden, params }
    }

    pub fn vocab(&self) -> &Library {
        &self.vocab
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn d_emb(&self) -> usize {
        self.d_emb
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    /// Index of the begin-of-sequence input.
    pub fn bos(&self) -> usize {
        self.vocab.len()
    }

    pub(crate) fn cell(&self) -> GruShape {
        GruShape { input: self.d_emb, hidden: self.hidden }
    }

    pub(crate) fn cell_offset(&self) -> usize {
        (self.vocab.len() + 1) * self.d_emb
    }

    pub(crate) fn out_offset(&self) -> usize {
        self.cell_offset() + self.cell().param_count()
    }

    pub(crate) fn bias_offset(&self) -> usize {
        self.out_offset() + self.hidden * self.vocab.len()
    }

    /// Errors unless token names and arities match `lib` position by position.
    pub fn check_alignment(&self, lib: &Library) -> Result<(), MlmError> {
        if self.vocab.len() != lib.len() {
            return Err(MlmError::VocabMismatch(format!(
                "model has {} tokens, library {} has {}",
                self.vocab.len(),
                lib.name(),
                lib.len()
            )));
        }
        for (i, (a, b)) in self.vocab.tokens().iter().zip(lib.tokens()).enumerate() {
            if a.name != b.name || a.arity != b.arity {
                return Err(MlmError::VocabMismatch(format!(
                    "position {i}: model has {:?}/{}, library has {:?}/{}",
                    a.name, a.arity, b.name, b.arity
                )));
            }
        }
        Ok(())
    }

    pub fn initial_state(&self) -> MlmState<T> {
        MlmState(vec![T::zero(); self.hidden])
    }

    pub(crate) fn embedding(&self, input: usize) -> Vec<T> {
        self.params[input * self.d_emb..(input + 1) * self.d_emb].to_vec()
    }

    pub(crate) fn logits_from(&self, h: &[T]) -> Vec<T> {
        let v = self.vocab.len();
        let (w, b) = (self.out_offset(), self.bias_offset());
        let mut logits = self.params[b..b + v].to_vec();
        for (j, &hj) in h.iter().enumerate() {
            let row = &self.params[w + j * v..w + (j + 1) * v];
            for (l, &wv) in logits.iter_mut().zip(row) {
                *l += hj * wv;
            }
        }
        logits
    }

    /// One recurrent step. `token = None` feeds the begin-of-sequence marker.
    pub fn step(&self, token: Option<usize>, state: &MlmState<T>) -> Result<(Vec<T>, MlmState<T>), MlmError> {
        let input = match token {
            Some(t) if t >= self.vocab.len() => {
                return Err(MlmError::IndexOutOfRange { index: t, vocab: self.vocab.len() })
            }
            Some(t) => t,
            None => self.bos(),
        };
        let p = &self.params[self.cell_offset()..self.out_offset()];
        let cache = self.cell().forward(p, Input::Dense(self.embedding(input)), &state.0);
        let logits = self.logits_from(&cache.h);
        Ok((logits, MlmState(cache.h)))
    }

    /// Total log-probability of `seq`, stepping from the begin marker.
    pub fn score(&self, seq: &[usize]) -> Result<T, MlmError> {
        let mut state = self.initial_state();
        let mut prev = None;
        let mut total = T::zero();
        for &t in seq {
            if t >= self.vocab.len() {
                return Err(MlmError::IndexOutOfRange { index: t, vocab: self.vocab.len() });
            }
            let (logits, next) = self.step(prev, &state)?;
            total += nn::log_softmax(&logits)[t];
            state = next;
            prev = Some(t);
        }
        Ok(total)
    }

    /// Autoregressive draw that stops at completion or `max_len`.
    pub fn sample(&self, max_len: usize, seed: u64) -> Sample {
        let arities = self.vocab.arities();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut state = self.initial_state();
        let mut seq = Vec::new();
        let mut prev = None;
        while seq.len() < max_len.max(1) {
            let (logits, next) = self.step(prev, &state).expect("sampled tokens are in range");
            let t = nn::sample_categorical(&nn::softmax(&logits), &mut rng);
            seq.push(t);
            if dangling_after(&arities, &seq).last() == Some(&0) {
                return Sample { traversal: Traversal(seq), truncated: false };
            }
            state = next;
            prev = Some(t);
        }
        Sample { traversal: Traversal(seq), truncated: true }
    }
}
