use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ConstraintSet, DsrError, Rule, SlotTracker, SrConfig};
use crate::mlm::MlmModel;
use crate::nn::{self, GruCache, GruShape, Input, Optimizer};
use crate::{Library, Scalar, Traversal};

/// Recurrent policy over library tokens. Its input is the parent one-hot
/// followed by the sibling one-hot, each with an extra "empty" position.
#[derive(Debug, Clone, PartialEq)]
pub struct Controller<T> {
    vocab: usize,
    hidden: usize,
    pub params: Vec<T>,
}

/// Frozen language-model prior and its inverse temperature.
#[derive(Debug, Clone, Copy)]
pub struct Prior<'a, T> {
    pub model: &'a MlmModel<T>,
    pub lambda: T,
}

/// One sampled expression with everything needed to recompute its
/// log-probability under a changed controller.
#[derive(Debug, Clone, PartialEq)]
pub struct Episode<T> {
    pub tokens: Vec<usize>,
    /// One-hot positions of the controller input at each step.
    pub inputs: Vec<[usize; 2]>,
    /// Constraint logits (`0` or `-inf`) at each step.
    pub masks: Vec<Vec<T>>,
    /// Scaled prior logits at each step; empty without a prior.
    pub prior: Vec<Vec<T>>,
}

impl<T> Episode<T> {
    pub fn traversal(&self) -> Traversal {
        Traversal(self.tokens.clone())
    }
}

/// `dsr + lambda * mlm + mask`, or `dsr + mask` without a prior.
pub fn combine_logits<T: Scalar>(dsr: &[T], scaled_prior: Option<&[T]>, mask: &[T]) -> Vec<T> {
    match scaled_prior {
        Some(prior) => dsr.iter().zip(prior).zip(mask).map(|((&a, &b), &c)| a + b + c).collect(),
        None => dsr.iter().zip(mask).map(|(&a, &c)| a + c).collect(),
    }
}

/// Draws a token from `softmax(dsr + lambda * mlm + mask)`.
pub fn combine_and_sample<T: Scalar, R: Rng>(
    dsr: &[T],
    mlm: Option<&[T]>,
    mask: &[T],
    lambda: T,
    rng: &mut R,
) -> usize {
    let scaled: Option<Vec<T>> = mlm.map(|m| m.iter().map(|&v| lambda * v).collect());
    let probs = nn::softmax(&combine_logits(dsr, scaled.as_deref(), mask));
    nn::sample_categorical(&probs, rng)
}

impl<T: Scalar> Controller<T> {
    /// Recurrent weights uniform in `+-1/sqrt(hidden)`; the output layer starts
    /// at zero, so the untrained policy is uniform over allowed tokens.
    pub fn init<R: Rng>(vocab: usize, hidden: usize, rng: &mut R) -> Controller<T> {
        let mut c = Controller { vocab, hidden, params: vec![T::zero(); Self::count(vocab, hidden)] };
        let end = c.cell().param_count();
        nn::uniform_init(&mut c.params[..end], 1.0 / (hidden as f64).sqrt(), rng);
        c
    }

    fn count(vocab: usize, hidden: usize) -> usize {
        let cell = GruShape { input: 2 * (vocab + 1), hidden };
        cell.param_count() + hidden * vocab + vocab
    }

    fn cell(&self) -> GruShape {
        GruShape { input: 2 * (self.vocab + 1), hidden: self.hidden }
    }

    pub fn vocab(&self) -> usize {
        self.vocab
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    /// Input positions for a (parent, sibling) pair.
    pub fn encode(&self, parent: Option<usize>, sibling: Option<usize>) -> [usize; 2] {
        let v = self.vocab;
        [parent.unwrap_or(v), v + 1 + sibling.unwrap_or(v)]
    }

    fn forward(&self, x: [usize; 2], h: &[T]) -> GruCache<T> {
        let end = self.cell().param_count();
        self.cell().forward(&self.params[..end], Input::OneHot(x.to_vec()), h)
    }

    fn logits(&self, h: &[T]) -> Vec<T> {
        let (v, w) = (self.vocab, self.cell().param_count());
        let b = w + self.hidden * v;
        let mut out = self.params[b..b + v].to_vec();
        for (j, &hj) in h.iter().enumerate() {
            for (k, o) in out.iter_mut().enumerate() {
                *o += hj * self.params[w + j * v + k];
            }
        }
        out
    }

    /// One step: logits and the next state.
    pub fn step(&self, x: [usize; 2], h: &[T]) -> (Vec<T>, Vec<T>) {
        let cache = self.forward(x, h);
        (self.logits(&cache.h), cache.h)
    }

    /// Loss of the risk-seeking objective on `episodes` with the given
    /// advantages, and its gradient with respect to the controller only:
    /// `-(1/K) sum_i A_i log p(tau_i) - w (1/K) sum_i sum_t H_it`.
    pub fn policy_gradient(
        &self,
        episodes: &[&Episode<T>],
        advantages: &[T],
        entropy_weight: T,
    ) -> (T, Vec<T>) {
        let mut grad = vec![T::zero(); self.params.len()];
        let mut loss = T::zero();
        if episodes.is_empty() {
            return (loss, grad);
        }
        let k_inv = T::one() / T::of(episodes.len() as f64);
        let (v, hn) = (self.vocab, self.hidden);
        let w_out = self.cell().param_count();
        let b_out = w_out + hn * v;
        for (ep, &adv) in episodes.iter().zip(advantages) {
            let mut h = vec![T::zero(); hn];
            let mut steps = Vec::with_capacity(ep.tokens.len());
            for (t, &x) in ep.inputs.iter().enumerate() {
                let cache = self.forward(x, &h);
                h = cache.h.clone();
                let prior = ep.prior.get(t).map(|p| &p[..]);
                let probs = nn::softmax(&combine_logits(&self.logits(&cache.h), prior, &ep.masks[t]));
                steps.push((cache, probs));
            }
            let mut dh_next = vec![T::zero(); hn];
            for (t, (cache, probs)) in steps.iter().enumerate().rev() {
                let a = ep.tokens[t];
                let ent = nn::entropy(probs);
                loss -= k_inv * (adv * probs[a].ln() + entropy_weight * ent);
                let dz: Vec<T> = probs
                    .iter()
                    .enumerate()
                    .map(|(j, &p)| {
                        if p <= T::zero() {
                            return T::zero();
                        }
                        let onehot = if j == a { T::one() } else { T::zero() };
                        k_inv * (adv * (p - onehot) + entropy_weight * p * (p.ln() + ent))
                    })
                    .collect();
                let mut dh = dh_next;
                for (k, &g) in dz.iter().enumerate() {
                    grad[b_out + k] += g;
                }
                for j in 0..hn {
                    let row = w_out + j * v;
                    let mut acc = T::zero();
                    for k in 0..v {
                        grad[row + k] += cache.h[j] * dz[k];
                        acc += self.params[row + k] * dz[k];
                    }
                    dh[j] += acc;
                }
                let cell_end = self.cell().param_count();
                let (dh_prev, _) =
                    self.cell().backward(&self.params[..cell_end], cache, &dh, &mut grad[..cell_end]);
                dh_next = dh_prev;
            }
        }
        (loss, grad)
    }
}

/// Samples one expression (Algorithm 1 of the integration): the controller
/// and the prior advance on the same (parent, sibling) input each step; the
/// prior reads the sibling if present, else the parent, else its begin marker.
/// The maximum-length rule from `config` always applies, so the loop ends
/// with a complete traversal.
pub fn sample_expression<T: Scalar, R: Rng>(
    controller: &Controller<T>,
    prior: Option<&Prior<'_, T>>,
    cs: &ConstraintSet,
    lib: &Library,
    config: &SrConfig,
    rng: &mut R,
) -> Result<Episode<T>, DsrError> {
    let cap = ConstraintSet { rules: vec![Rule::MaxLength(config.max_length)] };
    let mut slot = SlotTracker::new();
    let mut h = vec![T::zero(); controller.hidden()];
    let mut mlm_state = prior.map(|p| p.model.initial_state());
    let mut ep = Episode { tokens: Vec::new(), inputs: Vec::new(), masks: Vec::new(), prior: Vec::new() };
    loop {
        let (parent, sibling) = (slot.parent(), slot.sibling());
        let x = controller.encode(parent, sibling);
        let (dsr, next_h) = controller.step(x, &h);
        h = next_h;
        let mut mask: Vec<T> = cs.logits(lib, &slot)?;
        for (m, c) in mask.iter_mut().zip(cap.logits::<T>(lib, &slot)?) {
            *m += c;
        }
        if mask.iter().all(|&m| m == T::neg_infinity()) {
            return Err(DsrError::Infeasible { length: slot.len() });
        }
        let scaled = match (prior, mlm_state.as_mut()) {
            (Some(p), Some(state)) => {
                let (logits, next) = p.model.step(sibling.or(parent), state)?;
                *state = next;
                Some(logits.into_iter().map(|l| p.lambda * l).collect::<Vec<T>>())
            }
            _ => None,
        };
        let probs = nn::softmax(&combine_logits(&dsr, scaled.as_deref(), &mask));
        let token = nn::sample_categorical(&probs, rng);
        slot.push(token, lib.arity(token));
        ep.tokens.push(token);
        ep.inputs.push(x);
        ep.masks.push(mask);
        if let Some(s) = scaled {
            ep.prior.push(s);
        }
        if slot.is_complete() {
            return Ok(ep);
        }
    }
}

/// The `(1 - epsilon)` quantile of `rewards`, taking the higher neighbour.
pub fn risk_threshold(rewards: &[f64], epsilon: f64) -> f64 {
    let mut sorted = rewards.to_vec();
    sorted.sort_by(f64::total_cmp);
    let idx = ((1.0 - epsilon) * (sorted.len() - 1) as f64).ceil() as usize;
    sorted[idx.min(sorted.len() - 1)]
}

/// Outcome of one policy update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainStats {
    pub threshold: f64,
    pub kept: usize,
    pub loss: f64,
}

/// Risk-seeking update: keeps samples at or above the reward quantile and
/// uses the quantile as baseline. Only the controller changes.
pub fn train_step<T: Scalar>(
    controller: &mut Controller<T>,
    optimizer: &mut dyn Optimizer<T>,
    episodes: &[Episode<T>],
    rewards: &[f64],
    config: &SrConfig,
) -> TrainStats {
    let threshold = risk_threshold(rewards, config.epsilon);
    let (kept, advantages): (Vec<&Episode<T>>, Vec<T>) = episodes
        .iter()
        .zip(rewards)
        .filter(|(_, &r)| r >= threshold)
        .map(|(e, &r)| (e, T::of(r - threshold)))
        .unzip();
    let (loss, grad) = controller.policy_gradient(&kept, &advantages, T::of(config.entropy_weight));
    optimizer.step(&mut controller.params, &grad);
    TrainStats { threshold, kept: kept.len(), loss: loss.as_f64() }
}

/// Fresh controller seeded from `seed`.
pub fn controller_for(lib: &Library, config: &SrConfig, seed: u64) -> (Controller<f64>, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = Controller::init(lib.len(), config.hidden, &mut rng);
    (c, rng)
}
