//! Small dense building blocks shared by the language model and the search
//! controller: a gated recurrent cell with exact gradients, numerically safe
//! softmax, and first-order optimizers. Parameters live in flat slices so a
//! whole model is one `Vec`.

mod gru;
mod optim;
mod softmax;

pub use gru::{GruCache, GruShape, Input};
pub use optim::{Adam, Optimizer, OptimizerKind, Sgd};
pub use softmax::{entropy, log_softmax, sample_categorical, softmax, softmax_with_temperature};

use rand::Rng;

use crate::Scalar;

/// Fills `out` with draws from U(-bound, bound).
pub fn uniform_init<T: Scalar, R: Rng>(out: &mut [T], bound: f64, rng: &mut R) {
    for v in out {
        *v = T::of(rng.random_range(-bound..bound));
    }
}
