use rand::Rng;

use crate::Scalar;

fn max_finite<T: Scalar>(logits: &[T]) -> T {
    logits.iter().copied().filter(|v| *v > T::neg_infinity()).fold(T::neg_infinity(), T::max)
}

/// Softmax with max subtraction. Entries at `-inf` get probability exactly
/// zero; if every entry is `-inf` the result is all zeros.
pub fn softmax<T: Scalar>(logits: &[T]) -> Vec<T> {
    let m = max_finite(logits);
    if m == T::neg_infinity() {
        return vec![T::zero(); logits.len()];
    }
    let mut out: Vec<T> =
        logits.iter().map(|&l| if l == T::neg_infinity() { T::zero() } else { (l - m).exp() }).collect();
    let total: T = out.iter().copied().sum();
    for p in &mut out {
        *p /= total;
    }
    out
}

/// `softmax(logits / temperature)`; `temperature` must be positive.
pub fn softmax_with_temperature<T: Scalar>(logits: &[T], temperature: T) -> Vec<T> {
    let scaled: Vec<T> = logits.iter().map(|&l| l / temperature).collect();
    softmax(&scaled)
}

/// Log-probabilities; masked entries stay `-inf`.
pub fn log_softmax<T: Scalar>(logits: &[T]) -> Vec<T> {
    let m = max_finite(logits);
    let total: T = logits.iter().filter(|l| **l > T::neg_infinity()).map(|&l| (l - m).exp()).sum();
    let log_z = m + total.ln();
    logits.iter().map(|&l| l - log_z).collect()
}

/// Shannon entropy in nats; zero-probability entries contribute nothing.
pub fn entropy<T: Scalar>(probs: &[T]) -> T {
    -probs.iter().filter(|p| **p > T::zero()).map(|&p| p * p.ln()).sum::<T>()
}

/// Draws an index with probability proportional to `probs`. Zero-probability
/// indices are never returned.
pub fn sample_categorical<T: Scalar, R: Rng>(probs: &[T], rng: &mut R) -> usize {
    let total: f64 = probs.iter().map(|p| p.as_f64()).sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = None;
    for (i, p) in probs.iter().enumerate() {
        let p = p.as_f64();
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = Some(i);
        if u < acc {
            return i;
        }
    }
    last.expect("at least one positive probability")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn masked_entries_are_zero() {
        let p = softmax(&[1.0, f64::NEG_INFINITY, 1.0]);
        assert_eq!(p, vec![0.5, 0.0, 0.5]);
        let lp = log_softmax(&[0.0, f64::NEG_INFINITY]);
        assert_eq!(lp[0], 0.0);
        assert_eq!(lp[1], f64::NEG_INFINITY);
    }

    #[test]
    fn large_logits_are_stable() {
        let p = softmax(&[1000.0f32, 999.0]);
        assert!((p[0] + p[1] - 1.0).abs() < 1e-6);
        assert!(p[0] > p[1]);
    }

    #[test]
    fn entropy_of_uniform() {
        let h = entropy(&[0.25f64; 4]);
        assert!((h - 4f64.ln()).abs() < 1e-15);
        assert_eq!(entropy(&[1.0f64, 0.0]), 0.0);
    }

    #[test]
    fn sampling_respects_mask() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let probs = [0.0, 0.3, 0.0, 0.7];
        let mut counts = [0usize; 4];
        for _ in 0..10_000 {
            counts[sample_categorical(&probs, &mut rng)] += 1;
        }
        assert_eq!(counts[0] + counts[2], 0);
        assert!((counts[3] as f64 / 10_000.0 - 0.7).abs() < 0.03);
    }
}
