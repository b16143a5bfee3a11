use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::Scalar;

/// Updates a flat parameter vector in place from a gradient of the same length.
pub trait Optimizer<T: Scalar> {
    fn step(&mut self, params: &mut [T], grads: &[T]);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

impl FromStr for OptimizerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sgd" => Ok(OptimizerKind::Sgd),
            "adam" => Ok(OptimizerKind::Adam),
            other => Err(format!("unknown optimizer {other:?} (expected sgd or adam)")),
        }
    }
}

/// SGD with heavy-ball momentum: `v = mu v + g; p -= lr v`.
#[derive(Debug, Clone)]
pub struct Sgd<T> {
    pub lr: T,
    pub momentum: T,
    velocity: Vec<T>,
}

impl<T: Scalar> Sgd<T> {
    pub fn new(lr: T, momentum: T, n_params: usize) -> Self {
        Sgd { lr, momentum, velocity: vec![T::zero(); n_params] }
    }
}

impl<T: Scalar> Optimizer<T> for Sgd<T> {
    fn step(&mut self, params: &mut [T], grads: &[T]) {
        for ((p, &g), v) in params.iter_mut().zip(grads).zip(&mut self.velocity) {
            *v = self.momentum * *v + g;
            *p -= self.lr * *v;
        }
    }
}

#[derive(Debug, Clone)]
pub struct Adam<T> {
    pub lr: T,
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
    m: Vec<T>,
    v: Vec<T>,
    t: i32,
}

impl<T: Scalar> Adam<T> {
    pub fn new(lr: T, n_params: usize) -> Self {
        Adam {
            lr,
            beta1: T::of(0.9),
            beta2: T::of(0.999),
            eps: T::of(1e-8),
            m: vec![T::zero(); n_params],
            v: vec![T::zero(); n_params],
            t: 0,
        }
    }
}

impl<T: Scalar> Optimizer<T> for Adam<T> {
    fn step(&mut self, params: &mut [T], grads: &[T]) {
        self.t += 1;
        let one = T::one();
        let c1 = one - self.beta1.powi(self.t);
        let c2 = one - self.beta2.powi(self.t);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (one - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (one - self.beta2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimize(opt: &mut dyn Optimizer<f64>) -> f64 {
        // f(p) = (p0 - 3)^2 + 2 (p1 + 1)^2
        let mut p = vec![0.0, 0.0];
        for _ in 0..2000 {
            let g = [2.0 * (p[0] - 3.0), 4.0 * (p[1] + 1.0)];
            opt.step(&mut p, &g);
        }
        (p[0] - 3.0).abs() + (p[1] + 1.0).abs()
    }

    #[test]
    fn both_converge_on_a_quadratic() {
        assert!(minimize(&mut Sgd::new(0.01, 0.9, 2)) < 1e-6);
        assert!(minimize(&mut Adam::new(0.05, 2)) < 1e-3);
    }

    #[test]
    fn first_adam_step_has_size_lr() {
        let mut adam = Adam::new(0.1, 1);
        let mut p = vec![1.0f64];
        adam.step(&mut p, &[123.0]);
        assert!((p[0] - 0.9).abs() < 1e-9);
    }
}
