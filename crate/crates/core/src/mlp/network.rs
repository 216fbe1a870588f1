use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::stream_rng;

/// Fully connected network: ReLU on hidden layers, logistic output.
///
/// `weights[l]` is the row-major `dims[l+1] × dims[l]` matrix of layer `l`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub layer_dims: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

/// Gradients with the same layout as [`Network`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

pub(crate) fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Reusable activation buffers for forward and backward passes.
pub(crate) struct Workspace {
    /// Post-activation values per layer, `acts[0]` being the input.
    acts: Vec<Vec<f64>>,
    deltas: Vec<Vec<f64>>,
}

impl Network {
    /// He-uniform initialization for ReLU layers, Glorot-uniform for the
    /// output layer, zero biases.
    pub fn new(layer_dims: &[usize], seed: u64) -> Self {
        assert!(layer_dims.len() >= 2 && layer_dims.iter().all(|&d| d > 0));
        assert_eq!(*layer_dims.last().unwrap(), 1, "network has a single output");
        let mut rng = stream_rng(seed, 0);
        let layers = layer_dims.len() - 1;
        let mut weights = Vec::with_capacity(layers);
        let mut biases = Vec::with_capacity(layers);
        for l in 0..layers {
            let (fan_in, fan_out) = (layer_dims[l], layer_dims[l + 1]);
            let bound = if l + 1 < layers {
                (6.0 / fan_in as f64).sqrt()
            } else {
                (6.0 / (fan_in + fan_out) as f64).sqrt()
            };
            weights.push((0..fan_in * fan_out).map(|_| rng.random_range(-bound..bound)).collect());
            biases.push(vec![0.0; fan_out]);
        }
        Self {
            layer_dims: layer_dims.to_vec(),
            weights,
            biases,
        }
    }

    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.biases).flatten().all(|w| w.is_finite())
    }

    pub(crate) fn workspace(&self) -> Workspace {
        Workspace {
            acts: self.layer_dims.iter().map(|&d| vec![0.0; d]).collect(),
            deltas: self.layer_dims[1..].iter().map(|&d| vec![0.0; d]).collect(),
        }
    }

    pub(crate) fn forward_into(&self, x: &[f64], ws: &mut Workspace) -> f64 {
        ws.acts[0].copy_from_slice(x);
        let last = self.num_layers() - 1;
        for l in 0..=last {
            let (input, output) = ws.acts.split_at_mut(l + 1);
            let input = &input[l];
            let output = &mut output[0];
            let w = &self.weights[l];
            let n_in = input.len();
            for (j, out) in output.iter_mut().enumerate() {
                let row = &w[j * n_in..(j + 1) * n_in];
                let z = self.biases[l][j] + row.iter().zip(input).map(|(a, b)| a * b).sum::<f64>();
                *out = if l == last { logistic(z) } else { z.max(0.0) };
            }
        }
        ws.acts[last + 1][0]
    }

    pub fn forward(&self, x: &[f64]) -> f64 {
        self.forward_into(x, &mut self.workspace())
    }

    /// Adds `scale · ∂y/∂θ · upstream` into `grads` for the sample currently
    /// held in `ws` (after [`Self::forward_into`]).
    pub(crate) fn backward_into(&self, ws: &mut Workspace, upstream: f64, scale: f64, grads: &mut Gradients) {
        let last = self.num_layers() - 1;
        let y = ws.acts[last + 1][0];
        ws.deltas[last][0] = upstream * y * (1.0 - y);
        for l in (0..=last).rev() {
            let n_in = self.layer_dims[l];
            for j in 0..self.layer_dims[l + 1] {
                let d = ws.deltas[l][j];
                if d == 0.0 {
                    continue;
                }
                grads.biases[l][j] += scale * d;
                let gw = &mut grads.weights[l][j * n_in..(j + 1) * n_in];
                for (g, a) in gw.iter_mut().zip(&ws.acts[l]) {
                    *g += scale * d * a;
                }
            }
            if l == 0 {
                break;
            }
            // Propagate to the previous (ReLU) layer.
            let (prev, cur) = ws.deltas.split_at_mut(l);
            let prev = &mut prev[l - 1];
            let cur = &cur[0];
            let w = &self.weights[l];
            for (i, p) in prev.iter_mut().enumerate() {
                if ws.acts[l][i] <= 0.0 {
                    *p = 0.0;
                    continue;
                }
                *p = cur.iter().enumerate().map(|(j, d)| d * w[j * n_in + i]).sum();
            }
        }
    }

    pub fn zero_gradients(&self) -> Gradients {
        Gradients {
            weights: self.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            biases: self.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    /// Mean absolute error over a batch.
    pub fn mae(&self, xs: &[[f64; 3]], targets: &[f64]) -> f64 {
        let mut ws = self.workspace();
        xs.iter()
            .zip(targets)
            .map(|(x, t)| (self.forward_into(x, &mut ws) - t).abs())
            .sum::<f64>()
            / xs.len() as f64
    }

    /// MAE over the batch and its gradient. The subgradient of `|r|` at
    /// `r = 0` is taken as 0.
    pub fn mae_gradients(&self, xs: &[[f64; 3]], targets: &[f64]) -> (f64, Gradients) {
        let mut grads = self.zero_gradients();
        let mut ws = self.workspace();
        let scale = 1.0 / xs.len() as f64;
        let mut loss = 0.0;
        for (x, t) in xs.iter().zip(targets) {
            let r = self.forward_into(x, &mut ws) - t;
            loss += r.abs();
            let sign = if r > 0.0 {
                1.0
            } else if r < 0.0 {
                -1.0
            } else {
                0.0
            };
            if sign != 0.0 {
                self.backward_into(&mut ws, sign, scale, &mut grads);
            }
        }
        (loss * scale, grads)
    }

    pub fn apply_gradients(&mut self, grads: &Gradients, lr: f64) {
        for (w, g) in self.weights.iter_mut().flatten().zip(grads.weights.iter().flatten()) {
            *w -= lr * g;
        }
        for (b, g) in self.biases.iter_mut().flatten().zip(grads.biases.iter().flatten()) {
            *b -= lr * g;
        }
    }
}
