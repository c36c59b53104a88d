//! Dueling MLP with hand-written backpropagation.
//!
//! All parameters live in one flat vector so the optimizer and gradient
//! checks can treat them uniformly. Each dense layer stores its weights
//! input-major (`w[i * out + j]` connects input `i` to output `j`) followed
//! by its biases. Layer order: hidden layers, value head, advantage head.

use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;

pub const NUM_ACTIONS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    /// Offset of the first weight in the flat parameter vector.
    pub offset: usize,
}

impl Dense {
    pub fn weights(&self) -> core::ops::Range<usize> {
        self.offset..self.offset + self.inputs * self.outputs
    }

    pub fn biases(&self) -> core::ops::Range<usize> {
        let start = self.offset + self.inputs * self.outputs;
        start..start + self.outputs
    }

    fn end(&self) -> usize {
        self.offset + (self.inputs + 1) * self.outputs
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QNetwork {
    input_dim: usize,
    hidden: Vec<usize>,
    params: Vec<f64>,
}

/// Activations kept from a forward pass for the backward pass.
#[derive(Debug, Clone, Default)]
pub struct Trace {
    /// `acts[0]` is the input, `acts[l + 1]` the output of hidden layer `l`.
    acts: Vec<Vec<f64>>,
    advantages: [f64; NUM_ACTIONS],
    value: f64,
}

fn layers_for(input_dim: usize, hidden: &[usize]) -> Vec<Dense> {
    let mut out = Vec::with_capacity(hidden.len() + 2);
    let mut offset = 0;
    let mut inputs = input_dim;
    for &h in hidden {
        let d = Dense { inputs, outputs: h, offset };
        offset = d.end();
        out.push(d);
        inputs = h;
    }
    let value = Dense { inputs, outputs: 1, offset };
    let adv = Dense { inputs, outputs: NUM_ACTIONS, offset: value.end() };
    out.push(value);
    out.push(adv);
    out
}

fn dense_forward(params: &[f64], d: &Dense, x: &[f64], y: &mut Vec<f64>) {
    y.clear();
    y.extend_from_slice(&params[d.biases()]);
    let w = &params[d.weights()];
    for (i, &xi) in x.iter().enumerate() {
        if xi == 0.0 {
            continue;
        }
        let row = &w[i * d.outputs..(i + 1) * d.outputs];
        for (yj, &wij) in y.iter_mut().zip(row) {
            *yj += xi * wij;
        }
    }
}

impl QNetwork {
    /// He-uniform weights, zero biases.
    pub fn new<R: Rng + ?Sized>(input_dim: usize, hidden: &[usize], rng: &mut R) -> Self {
        let layers = layers_for(input_dim, hidden);
        let total = layers.last().map_or(0, Dense::end);
        let mut params = alloc::vec![0.0; total];
        for d in &layers {
            let limit = math::sqrt(6.0 / d.inputs as f64);
            for w in &mut params[d.weights()] {
                *w = (rng.random::<f64>() * 2.0 - 1.0) * limit;
            }
        }
        Self { input_dim, hidden: hidden.to_vec(), params }
    }

    pub fn from_params(input_dim: usize, hidden: &[usize], params: Vec<f64>) -> Result<Self> {
        let expected = layers_for(input_dim, hidden).last().map_or(0, Dense::end);
        if params.len() != expected {
            return Err(Error::Dimension { expected, got: params.len() });
        }
        Ok(Self { input_dim, hidden: hidden.to_vec(), params })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden(&self) -> &[usize] {
        &self.hidden
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn layers(&self) -> Vec<Dense> {
        layers_for(self.input_dim, &self.hidden)
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() == self.input_dim {
            Ok(())
        } else {
            Err(Error::Dimension { expected: self.input_dim, got: x.len() })
        }
    }

    /// Q-values `V(o) + A(o, a) - mean_a' A(o, a')`.
    pub fn forward(&self, x: &[f64]) -> Result<[f64; NUM_ACTIONS]> {
        let mut trace = Trace::default();
        self.forward_trace(x, &mut trace)
    }

    pub fn forward_trace(&self, x: &[f64], trace: &mut Trace) -> Result<[f64; NUM_ACTIONS]> {
        self.check(x)?;
        let layers = self.layers();
        let n_hidden = self.hidden.len();
        trace.acts.resize_with(n_hidden + 1, Vec::new);
        trace.acts[0].clear();
        trace.acts[0].extend_from_slice(x);
        for (l, d) in layers[..n_hidden].iter().enumerate() {
            let (prev, rest) = trace.acts.split_at_mut(l + 1);
            let y = &mut rest[0];
            dense_forward(&self.params, d, &prev[l], y);
            for v in y.iter_mut() {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
        }
        let h = &trace.acts[n_hidden];
        let mut head = Vec::with_capacity(NUM_ACTIONS);
        dense_forward(&self.params, &layers[n_hidden], h, &mut head);
        trace.value = head[0];
        dense_forward(&self.params, &layers[n_hidden + 1], h, &mut head);
        trace.advantages.copy_from_slice(&head);
        Ok(aggregate(trace.value, &trace.advantages))
    }

    /// Accumulates `dL/dtheta` into `grad` given `dL/dQ` for the traced
    /// forward pass.
    pub fn backward(&self, trace: &Trace, dq: &[f64; NUM_ACTIONS], grad: &mut [f64]) {
        let layers = self.layers();
        let n_hidden = self.hidden.len();
        let d_value: f64 = dq.iter().sum();
        let mean = d_value / NUM_ACTIONS as f64;
        let mut d_adv = [0.0; NUM_ACTIONS];
        for (da, &g) in d_adv.iter_mut().zip(dq) {
            *da = g - mean;
        }

        let h = &trace.acts[n_hidden];
        let vd = &layers[n_hidden];
        let ad = &layers[n_hidden + 1];
        let mut dh = alloc::vec![0.0; h.len()];
        {
            let wv = vd.weights().start;
            let wa = ad.weights().start;
            for (i, &hi) in h.iter().enumerate() {
                grad[wv + i] += hi * d_value;
                let mut acc = self.params[wv + i] * d_value;
                for k in 0..NUM_ACTIONS {
                    grad[wa + i * NUM_ACTIONS + k] += hi * d_adv[k];
                    acc += self.params[wa + i * NUM_ACTIONS + k] * d_adv[k];
                }
                dh[i] = acc;
            }
            grad[vd.biases().start] += d_value;
            for k in 0..NUM_ACTIONS {
                grad[ad.biases().start + k] += d_adv[k];
            }
        }

        for l in (0..n_hidden).rev() {
            let d = &layers[l];
            let out = &trace.acts[l + 1];
            for (g, &o) in dh.iter_mut().zip(out) {
                if o <= 0.0 {
                    *g = 0.0;
                }
            }
            let b0 = d.biases().start;
            for (j, &g) in dh.iter().enumerate() {
                grad[b0 + j] += g;
            }
            let x = &trace.acts[l];
            let w0 = d.weights().start;
            let need_dx = l > 0;
            let mut dx = if need_dx { alloc::vec![0.0; x.len()] } else { Vec::new() };
            for (i, &xi) in x.iter().enumerate() {
                let base = w0 + i * d.outputs;
                if xi != 0.0 {
                    for (gw, &g) in grad[base..base + d.outputs].iter_mut().zip(&dh) {
                        *gw += xi * g;
                    }
                }
                if need_dx {
                    let w = &self.params[base..base + d.outputs];
                    dx[i] = w.iter().zip(&dh).map(|(a, b)| a * b).sum();
                }
            }
            dh = dx;
        }
    }
}

pub fn aggregate(value: f64, advantages: &[f64; NUM_ACTIONS]) -> [f64; NUM_ACTIONS] {
    let mean = advantages.iter().sum::<f64>() / NUM_ACTIONS as f64;
    let mut q = [0.0; NUM_ACTIONS];
    for (qk, &a) in q.iter_mut().zip(advantages) {
        *qk = value + a - mean;
    }
    q
}
