use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{MlmError, MlmModel};
use crate::nn::{self, Adam, GruCache, Input, Optimizer, OptimizerKind, Sgd};
use crate::{Scalar, Traversal};

/// Sequences padded to a common length; `mask[i][t]` marks real targets.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Batch {
    pub sequences: Vec<Vec<usize>>,
    pub mask: Vec<Vec<bool>>,
}

impl Batch {
    /// Pads with token 0 and masks the padding out.
    pub fn from_sequences<S: AsRef<[usize]>>(seqs: &[S]) -> Batch {
        let width = seqs.iter().map(|s| s.as_ref().len()).max().unwrap_or(0);
        let mut batch = Batch::default();
        for s in seqs {
            let s = s.as_ref();
            let mut padded = s.to_vec();
            padded.resize(width, 0);
            batch.sequences.push(padded);
            batch.mask.push((0..width).map(|t| t < s.len()).collect());
        }
        batch
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }
}

/// Gradient of the summed masked cross-entropy.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchGradients<T> {
    pub loss_sum: T,
    pub n_tokens: usize,
    pub grads: Vec<T>,
}

impl<T: Scalar> BatchGradients<T> {
    fn zeros(n: usize) -> Self {
        BatchGradients { loss_sum: T::zero(), n_tokens: 0, grads: vec![T::zero(); n] }
    }

    fn add(&mut self, other: &BatchGradients<T>) {
        self.loss_sum += other.loss_sum;
        self.n_tokens += other.n_tokens;
        for (a, &b) in self.grads.iter_mut().zip(&other.grads) {
            *a += b;
        }
    }

    /// Mean per-token loss; zero when nothing is masked in.
    pub fn mean_loss(&self) -> T {
        if self.n_tokens == 0 {
            T::zero()
        } else {
            self.loss_sum / T::of(self.n_tokens as f64)
        }
    }
}

fn sequence_gradients<T: Scalar>(
    model: &MlmModel<T>,
    seq: &[usize],
    mask: &[bool],
    out: &mut BatchGradients<T>,
) {
    // Steps after the last real target cannot influence the loss.
    let Some(last) = mask.iter().rposition(|&m| m) else { return };
    let cell = model.cell();
    let (c0, c1) = (model.cell_offset(), model.out_offset());
    let (w_out, b_out) = (c1, model.bias_offset());
    let cell_params = &model.params[c0..c1];
    let (v, d, hn) = (model.vocab_size(), model.d_emb(), model.hidden());

    let mut caches: Vec<(usize, GruCache<T>, Vec<T>)> = Vec::with_capacity(last + 1);
    let mut h = vec![T::zero(); hn];
    for t in 0..=last {
        let input = if t == 0 { model.bos() } else { seq[t - 1] };
        let cache = cell.forward(cell_params, Input::Dense(model.embedding(input)), &h);
        h = cache.h.clone();
        let probs = nn::softmax(&model.logits_from(&cache.h));
        caches.push((input, cache, probs));
    }

    let mut dh_next = vec![T::zero(); hn];
    for t in (0..=last).rev() {
        let (input, cache, probs) = &caches[t];
        let mut dh = dh_next;
        if mask[t] {
            let target = seq[t];
            out.loss_sum -= probs[target].max(T::min_positive_value()).ln();
            out.n_tokens += 1;
            let mut dl = probs.clone();
            dl[target] -= T::one();
            for (k, &g) in dl.iter().enumerate() {
                out.grads[b_out + k] += g;
            }
            for j in 0..hn {
                let row = w_out + j * v;
                let mut acc = T::zero();
                for k in 0..v {
                    out.grads[row + k] += cache.h[j] * dl[k];
                    acc += model.params[row + k] * dl[k];
                }
                dh[j] += acc;
            }
        }
        let (dh_prev, dx) = cell.backward(cell_params, cache, &dh, &mut out.grads[c0..c1]);
        let dx = dx.expect("embedding input is dense");
        for (k, g) in dx.into_iter().enumerate() {
            out.grads[input * d + k] += g;
        }
        dh_next = dh_prev;
    }
}

/// Exact gradients of the masked cross-entropy summed over the batch.
/// Sequences are processed in fixed-size chunks in parallel and reduced in
/// chunk order, so the result does not depend on the thread count.
pub fn gradients<T: Scalar>(model: &MlmModel<T>, batch: &Batch) -> BatchGradients<T> {
    const CHUNK: usize = 4;
    let n = model.params.len();
    let items: Vec<(&Vec<usize>, &Vec<bool>)> = batch.sequences.iter().zip(&batch.mask).collect();
    let partials: Vec<BatchGradients<T>> = items
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut g = BatchGradients::zeros(n);
            for (seq, mask) in chunk {
                sequence_gradients(model, seq, mask, &mut g);
            }
            g
        })
        .collect();
    let mut total = BatchGradients::zeros(n);
    for p in &partials {
        total.add(p);
    }
    total
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub momentum: f64,
    pub optimizer: OptimizerKind,
    pub seed: u64,
    /// Stops after this many parameter updates, mid-epoch if needed.
    pub max_steps: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 200,
            lr: 0.002,
            batch_size: 64,
            momentum: 0.9,
            optimizer: OptimizerKind::Sgd,
            seed: 0,
            max_steps: None,
        }
    }
}

/// See [`train_with`].
pub fn train<T: Scalar>(
    model: &mut MlmModel<T>,
    corpus: &[Traversal],
    config: &TrainConfig,
) -> Result<Vec<f64>, MlmError> {
    train_with(model, corpus, config, |_, _| {})
}

/// Minibatch training on mean per-token cross-entropy.
///
/// The history starts with the loss of the untrained model over the whole
/// corpus, followed by one entry per epoch: the token-weighted mean of the
/// batch losses measured just before each update. `on_epoch(k, loss)` is
/// called for every entry, with `k = 0` for the baseline.
pub fn train_with<T: Scalar>(
    model: &mut MlmModel<T>,
    corpus: &[Traversal],
    config: &TrainConfig,
    mut on_epoch: impl FnMut(usize, f64),
) -> Result<Vec<f64>, MlmError> {
    if corpus.is_empty() {
        return Err(MlmError::EmptyCorpus);
    }
    if config.batch_size == 0 || !(config.lr > 0.0) {
        return Err(MlmError::InvalidConfig("batch size and learning rate must be positive".into()));
    }
    let v = model.vocab_size();
    if let Some(&bad) = corpus.iter().flat_map(|t| t.0.iter()).find(|&&i| i >= v) {
        return Err(MlmError::IndexOutOfRange { index: bad, vocab: v });
    }
    let n = model.params.len();
    let mut opt: Box<dyn Optimizer<T>> = match config.optimizer {
        OptimizerKind::Sgd => Box::new(Sgd::new(T::of(config.lr), T::of(config.momentum), n)),
        OptimizerKind::Adam => Box::new(Adam::new(T::of(config.lr), n)),
    };

    let mut baseline = BatchGradients::<T>::zeros(0);
    for chunk in corpus.chunks(config.batch_size) {
        let g = gradients(
            model,
            &Batch::from_sequences(chunk.iter().map(|t| &t.0[..]).collect::<Vec<_>>().as_slice()),
        );
        baseline.loss_sum += g.loss_sum;
        baseline.n_tokens += g.n_tokens;
    }
    let mut history = vec![baseline.mean_loss().as_f64()];
    on_epoch(0, history[0]);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    let mut steps = 0usize;
    'epochs: for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let (mut loss_sum, mut n_tokens) = (0.0, 0usize);
        for idx in order.chunks(config.batch_size) {
            if config.max_steps.is_some_and(|m| steps >= m) {
                if n_tokens > 0 {
                    history.push(loss_sum / n_tokens as f64);
                    on_epoch(epoch, loss_sum / n_tokens as f64);
                }
                break 'epochs;
            }
            let seqs: Vec<&[usize]> = idx.iter().map(|&i| &corpus[i].0[..]).collect();
            let mut g = gradients(model, &Batch::from_sequences(&seqs));
            loss_sum += g.loss_sum.as_f64();
            n_tokens += g.n_tokens;
            if g.n_tokens > 0 {
                let scale = T::one() / T::of(g.n_tokens as f64);
                g.grads.iter_mut().for_each(|x| *x *= scale);
                opt.step(&mut model.params, &g.grads);
            }
            steps += 1;
        }
        let mean = if n_tokens > 0 { loss_sum / n_tokens as f64 } else { 0.0 };
        history.push(mean);
        on_epoch(epoch, mean);
    }
    Ok(history)
}
