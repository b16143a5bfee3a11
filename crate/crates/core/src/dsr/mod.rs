//! Neural-guided symbolic regression.
//!
//! A recurrent controller proposes pre-order traversals token by token,
//! conditioned on the parent and sibling of the slot being filled. Its
//! logits are summed with constraint masks (`0` or `-inf`) and, optionally,
//! with the logits of a frozen language model scaled by an inverse
//! temperature `lambda`. Training is risk-seeking policy gradient on the
//! best fraction of each batch.

mod benchmark;
mod constraints;
mod controller;
mod metrics;
mod reward;
mod slots;

pub use benchmark::{
    builtin_specs, run_benchmark, run_single, Benchmark, BenchmarkSpec, RunMetrics, Sampling,
};
pub use constraints::{constraint_logits, ConstraintSet, Rule};
pub use controller::{
    combine_and_sample, combine_logits, controller_for, risk_threshold, sample_expression, train_step,
    Controller, Episode, Prior, TrainStats,
};
pub use metrics::{
    read_metrics, write_metrics, MetricsRow, Report, ReportCell, ReportColumn, Summary, CSV_HEADER,
};
pub use reward::{reward, Dataset, RewardOutcome};
pub use slots::{parent_sibling, SlotTracker};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mlm::MlmError;

#[derive(Debug, Error)]
pub enum DsrError {
    #[error("traversal is already complete")]
    CompleteTraversal,
    #[error("traversal closes before its end (at position {position})")]
    InvalidPrefix { position: usize },
    #[error("constraints mask every token after {length} tokens")]
    Infeasible { length: usize },
    #[error("target has zero variance")]
    DegenerateTarget,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("benchmark {name}: {reason}")]
    SpecMismatch { name: String, reason: String },
    #[error("metrics schema: {0}")]
    Schema(String),
    #[error(transparent)]
    Mlm(#[from] MlmError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

// Only the variants without payloads that cannot be compared are needed in tests.
impl PartialEq for DsrError {
    fn eq(&self, other: &Self) -> bool {
        use DsrError::*;
        match (self, other) {
            (CompleteTraversal, CompleteTraversal) | (DegenerateTarget, DegenerateTarget) => true,
            (InvalidPrefix { position: a }, InvalidPrefix { position: b }) => a == b,
            (Infeasible { length: a }, Infeasible { length: b }) => a == b,
            (InvalidConfig(a), InvalidConfig(b)) | (Schema(a), Schema(b)) => a == b,
            _ => false,
        }
    }
}

/// Search hyperparameters. Every field has a default and can be overridden.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SrConfig {
    /// Inverse temperature of the language-model prior.
    pub lambda: f64,
    pub batch_size: usize,
    pub max_steps: usize,
    /// Fraction of each batch kept by the risk-seeking update.
    pub epsilon: f64,
    pub learning_rate: f64,
    pub entropy_weight: f64,
    pub min_length: usize,
    pub max_length: usize,
    /// Controller hidden size.
    pub hidden: usize,
    /// Base seed; run `k` uses `seed + k`.
    pub seed: u64,
}

impl Default for SrConfig {
    fn default() -> Self {
        SrConfig {
            lambda: 0.5,
            batch_size: 500,
            max_steps: 2000,
            epsilon: 0.05,
            learning_rate: 0.0005,
            entropy_weight: 0.005,
            min_length: 4,
            max_length: 30,
            hidden: 32,
            seed: 0,
        }
    }
}

/// The inverse temperatures of a sweep: 0.1, 0.2, ..., 1.0.
pub fn lambda_sweep() -> Vec<f64> {
    (1..=10).map(|k| k as f64 / 10.0).collect()
}

impl SrConfig {
    pub fn validate(&self) -> Result<(), DsrError> {
        let bad = |m: &str| Err(DsrError::InvalidConfig(m.to_owned()));
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad("lambda must be a finite non-negative number");
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return bad("epsilon must lie in (0, 1]");
        }
        if self.min_length > self.max_length || self.max_length == 0 {
            return bad("need 1 <= max_length and min_length <= max_length");
        }
        if self.batch_size == 0 || self.max_steps == 0 || self.hidden == 0 {
            return bad("batch_size, max_steps and hidden must be at least 1");
        }
        if !(self.learning_rate > 0.0) || self.entropy_weight < 0.0 {
            return bad("learning_rate must be positive and entropy_weight non-negative");
        }
        Ok(())
    }

    /// Length bounds, no nested trigonometry, no direct exp/log inverses.
    pub fn constraint_set(&self) -> ConstraintSet {
        ConstraintSet::standard(self.min_length, self.max_length)
    }
}
