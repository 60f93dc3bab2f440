use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense ReLU network `W_L ReLU(... ReLU(W_1 x + b_1) ...) + b_L`.
///
/// Parameters are packed layer by layer: the row-major `n_out x n_in` weight
/// matrix followed by the `n_out` biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NnForm {
    pub layer_sizes: Vec<usize>,
}

impl NnForm {
    pub const DEFAULT_WIDTH: usize = 20;

    pub fn new(layer_sizes: Vec<usize>) -> Result<Self> {
        let form = NnForm { layer_sizes };
        form.validate()?;
        Ok(form)
    }

    /// `layers` weight layers of width 20 between `input_dim` and a scalar
    /// output. `layers = 1` is a plain affine map.
    pub fn with_depth(input_dim: usize, layers: usize) -> Result<Self> {
        if layers == 0 {
            return Err(Error::config("network needs at least one layer"));
        }
        let mut sizes = vec![input_dim];
        sizes.extend(std::iter::repeat_n(Self::DEFAULT_WIDTH, layers - 1));
        sizes.push(1);
        Self::new(sizes)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.len() < 2 {
            return Err(Error::config("layer_sizes needs an input and an output size"));
        }
        if self.layer_sizes.contains(&0) {
            return Err(Error::config(format!(
                "zero-width layer in {:?}",
                self.layer_sizes
            )));
        }
        if *self.layer_sizes.last().unwrap() != 1 {
            return Err(Error::config("network output size must be 1"));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn num_layers(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    pub fn num_params(&self) -> usize {
        self.layer_sizes
            .windows(2)
            .map(|w| (w[0] + 1) * w[1])
            .sum()
    }

    fn widest(&self) -> usize {
        *self.layer_sizes.iter().max().unwrap()
    }

    pub fn eval(&self, theta: &[f64], x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.input_dim());
        let width = self.widest();
        let mut cur = Vec::with_capacity(width);
        let mut next = Vec::with_capacity(width);
        cur.extend_from_slice(x);
        let mut offset = 0;
        let last = self.num_layers() - 1;
        for (l, w) in self.layer_sizes.windows(2).enumerate() {
            let (n_in, n_out) = (w[0], w[1]);
            let weights = &theta[offset..offset + n_in * n_out];
            let bias = &theta[offset + n_in * n_out..offset + (n_in + 1) * n_out];
            next.clear();
            for (row, b) in weights.chunks_exact(n_in).zip(bias) {
                let z = dot(row, &cur) + b;
                next.push(if l < last { z.max(0.0) } else { z });
            }
            std::mem::swap(&mut cur, &mut next);
            offset += (n_in + 1) * n_out;
        }
        cur[0]
    }

    /// Accumulates `cot * d(value)/d(theta)` into `grad` and returns the value.
    pub fn backward(&self, theta: &[f64], x: &[f64], cot: f64, grad: &mut [f64]) -> f64 {
        let layers = self.num_layers();
        // Forward pass keeping every layer's input.
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(layers + 1);
        acts.push(x.to_vec());
        let mut offsets = Vec::with_capacity(layers);
        let mut offset = 0;
        for (l, w) in self.layer_sizes.windows(2).enumerate() {
            let (n_in, n_out) = (w[0], w[1]);
            offsets.push(offset);
            let weights = &theta[offset..offset + n_in * n_out];
            let bias = &theta[offset + n_in * n_out..offset + (n_in + 1) * n_out];
            let input = &acts[l];
            let out: Vec<f64> = weights
                .chunks_exact(n_in)
                .zip(bias)
                .map(|(row, b)| {
                    let z = dot(row, input) + b;
                    if l + 1 < layers {
                        z.max(0.0)
                    } else {
                        z
                    }
                })
                .collect();
            acts.push(out);
            offset += (n_in + 1) * n_out;
        }
        let value = acts[layers][0];

        let mut delta = vec![cot];
        for l in (0..layers).rev() {
            let (n_in, n_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            let off = offsets[l];
            let input = &acts[l];
            {
                let (gw, gb) = grad[off..off + (n_in + 1) * n_out].split_at_mut(n_in * n_out);
                for (o, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    for (g, &a) in gw[o * n_in..(o + 1) * n_in].iter_mut().zip(input) {
                        *g += d * a;
                    }
                    gb[o] += d;
                }
            }
            if l == 0 {
                break;
            }
            let weights = &theta[off..off + n_in * n_out];
            let mut prev = vec![0.0; n_in];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                for (p, &w) in prev.iter_mut().zip(&weights[o * n_in..(o + 1) * n_in]) {
                    *p += d * w;
                }
            }
            // ReLU mask; the subgradient at exactly zero is zero.
            for (p, &a) in prev.iter_mut().zip(input) {
                if a <= 0.0 {
                    *p = 0.0;
                }
            }
            delta = prev;
        }
        value
    }

    /// He-uniform weights (bound `sqrt(6 / n_in)`), zero biases.
    pub fn init_params<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let mut theta = Vec::with_capacity(self.num_params());
        for w in self.layer_sizes.windows(2) {
            let (n_in, n_out) = (w[0], w[1]);
            let bound = (6.0 / n_in as f64).sqrt();
            let dist = Uniform::new_inclusive(-bound, bound).expect("finite bound");
            theta.extend((0..n_in * n_out).map(|_| dist.sample(rng)));
            theta.extend(std::iter::repeat_n(0.0, n_out));
        }
        theta
    }

    /// Moves every first-layer kink through a random point on the segment
    /// between two inputs (generically not an input itself) and
    /// rescales the output layer so that, over `inputs`, the network has
    /// standard deviation `spread` around the constant `level`.
    /// `inputs` is flat, `input_dim` values per point.
    pub fn condition_init<R: Rng>(&self, theta: &mut [f64], inputs: &[f64], level: f64, spread: f64, rng: &mut R) {
        let d = self.input_dim();
        let n_pts = inputs.len() / d;
        if n_pts == 0 || self.num_layers() < 2 {
            return;
        }
        let n1 = self.layer_sizes[1];
        for j in 0..n1 {
            let ia = rng.random_range(0..n_pts);
            let ib = if n_pts > 1 { (ia + rng.random_range(1..n_pts)) % n_pts } else { ia };
            let (a, b) = (&inputs[ia * d..][..d], &inputs[ib * d..][..d]);
            let u: f64 = rng.random();
            let x: Vec<f64> = a.iter().zip(b).map(|(p, q)| u * p + (1.0 - u) * q).collect();
            theta[n1 * d + j] = -dot(&theta[j * d..(j + 1) * d], &x);
        }
        let values: Vec<f64> = inputs.chunks(d).map(|x| self.eval(theta, x)).collect();
        let mean = values.iter().sum::<f64>() / n_pts as f64;
        let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n_pts as f64).sqrt();
        let n_last = self.layer_sizes[self.layer_sizes.len() - 2];
        let start = theta.len() - n_last - 1;
        let scale = if sd > 0.0 { spread / sd } else { 0.0 };
        theta[start..start + n_last].iter_mut().for_each(|w| *w *= scale);
        theta[start + n_last] = level;
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
