use crate::Scalar;

/// Dimensions of a gated recurrent cell and the layout of its parameters.
///
/// Layout inside the cell's slice: `W_z, W_r, W_n` (each `hidden x input`,
/// row-major), `U_z, U_r, U_n` (each `hidden x hidden`), `b_z, b_r, b_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GruShape {
    pub input: usize,
    pub hidden: usize,
}

/// A cell input: a dense vector, or a sum of one-hot vectors given by the
/// indices of their ones.
#[derive(Debug, Clone, PartialEq)]
pub enum Input<T> {
    Dense(Vec<T>),
    OneHot(Vec<usize>),
}

/// Everything the backward pass needs from one forward step.
#[derive(Debug, Clone)]
pub struct GruCache<T> {
    pub x: Input<T>,
    pub h_prev: Vec<T>,
    pub z: Vec<T>,
    pub r: Vec<T>,
    pub n: Vec<T>,
    pub h: Vec<T>,
}

fn sigmoid<T: Scalar>(a: T) -> T {
    T::one() / (T::one() + (-a).exp())
}

impl GruShape {
    pub fn param_count(&self) -> usize {
        3 * self.hidden * (self.input + self.hidden + 1)
    }

    fn w(&self, gate: usize) -> usize {
        gate * self.hidden * self.input
    }

    fn u(&self, gate: usize) -> usize {
        3 * self.hidden * self.input + gate * self.hidden * self.hidden
    }

    fn b(&self, gate: usize) -> usize {
        3 * self.hidden * (self.input + self.hidden) + gate * self.hidden
    }

    /// `out[j] += (W_gate x)[j]`.
    fn add_wx<T: Scalar>(&self, p: &[T], gate: usize, x: &Input<T>, out: &mut [T]) {
        let (i_n, base) = (self.input, self.w(gate));
        match x {
            Input::Dense(v) => {
                for (j, o) in out.iter_mut().enumerate() {
                    let row = &p[base + j * i_n..base + (j + 1) * i_n];
                    *o += row.iter().zip(v).map(|(&w, &xv)| w * xv).sum::<T>();
                }
            }
            Input::OneHot(idx) => {
                for (j, o) in out.iter_mut().enumerate() {
                    for &k in idx {
                        *o += p[base + j * i_n + k];
                    }
                }
            }
        }
    }

    /// `out[j] += (U_gate v)[j]`.
    fn add_uv<T: Scalar>(&self, p: &[T], gate: usize, v: &[T], out: &mut [T]) {
        let (h_n, base) = (self.hidden, self.u(gate));
        for (j, o) in out.iter_mut().enumerate() {
            let row = &p[base + j * h_n..base + (j + 1) * h_n];
            *o += row.iter().zip(v).map(|(&w, &x)| w * x).sum::<T>();
        }
    }

    /// One step; returns the cache, whose `h` is the new state.
    pub fn forward<T: Scalar>(&self, p: &[T], x: Input<T>, h_prev: &[T]) -> GruCache<T> {
        debug_assert_eq!(p.len(), self.param_count());
        let hn = self.hidden;
        let gate = |g: usize, recurrent: &[T]| -> Vec<T> {
            let mut a = p[self.b(g)..self.b(g) + hn].to_vec();
            self.add_wx(p, g, &x, &mut a);
            self.add_uv(p, g, recurrent, &mut a);
            a
        };
        let z: Vec<T> = gate(0, h_prev).into_iter().map(sigmoid).collect();
        let r: Vec<T> = gate(1, h_prev).into_iter().map(sigmoid).collect();
        let rh: Vec<T> = r.iter().zip(h_prev).map(|(&a, &b)| a * b).collect();
        let n: Vec<T> = gate(2, &rh).into_iter().map(|a| a.tanh()).collect();
        let h = (0..hn).map(|j| (T::one() - z[j]) * n[j] + z[j] * h_prev[j]).collect();
        GruCache { x, h_prev: h_prev.to_vec(), z, r, n, h }
    }

    /// Backpropagates `dh` through one step. Parameter gradients are added to
    /// `grad`; returns the gradient for the previous state and, for dense
    /// inputs, for the input.
    pub fn backward<T: Scalar>(
        &self,
        p: &[T],
        cache: &GruCache<T>,
        dh: &[T],
        grad: &mut [T],
    ) -> (Vec<T>, Option<Vec<T>>) {
        let (hn, i_n) = (self.hidden, self.input);
        let GruCache { x, h_prev, z, r, n, .. } = cache;
        let one = T::one();
        let mut dh_prev: Vec<T> = (0..hn).map(|j| dh[j] * z[j]).collect();
        let da_z: Vec<T> = (0..hn).map(|j| dh[j] * (h_prev[j] - n[j]) * z[j] * (one - z[j])).collect();
        let da_n: Vec<T> = (0..hn).map(|j| dh[j] * (one - z[j]) * (one - n[j] * n[j])).collect();
        let rh: Vec<T> = (0..hn).map(|j| r[j] * h_prev[j]).collect();

        // d(rh) = U_n^T da_n
        let mut drh = vec![T::zero(); hn];
        let un = self.u(2);
        for (j, &d) in da_n.iter().enumerate() {
            let row = &p[un + j * hn..un + (j + 1) * hn];
            for (k, &w) in row.iter().enumerate() {
                drh[k] += w * d;
            }
        }
        let mut da_r = vec![T::zero(); hn];
        for j in 0..hn {
            dh_prev[j] += drh[j] * r[j];
            da_r[j] = drh[j] * h_prev[j] * r[j] * (one - r[j]);
        }

        let mut dx = match x {
            Input::Dense(_) => Some(vec![T::zero(); i_n]),
            Input::OneHot(_) => None,
        };
        for (g, da, recurrent) in [(0, &da_z, h_prev), (1, &da_r, h_prev), (2, &da_n, &rh)] {
            let (wb, ub, bb) = (self.w(g), self.u(g), self.b(g));
            for j in 0..hn {
                let d = da[j];
                grad[bb + j] += d;
                match x {
                    Input::Dense(v) => {
                        let row = wb + j * i_n;
                        let dxv = dx.as_mut().expect("dense input");
                        for k in 0..i_n {
                            grad[row + k] += d * v[k];
                            dxv[k] += p[row + k] * d;
                        }
                    }
                    Input::OneHot(idx) => {
                        for &k in idx {
                            grad[wb + j * i_n + k] += d;
                        }
                    }
                }
                let row = ub + j * hn;
                for k in 0..hn {
                    grad[row + k] += d * recurrent[k];
                }
                if g < 2 {
                    for k in 0..hn {
                        dh_prev[k] += p[row + k] * d;
                    }
                }
            }
        }
        (dh_prev, dx)
    }
}
