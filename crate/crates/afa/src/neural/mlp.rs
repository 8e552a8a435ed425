//! Fully-connected network with smooth-gated hidden activations.

use rand_chacha::ChaCha8Rng;

use crate::neural::linear::Linear;
use crate::neural::ops::{gelu_backward, gelu_forward};
use crate::neural::{ParamSet, ParamTensor, Scalar};

/// Stack of linear layers with the smooth GELU nonlinearity between them.
/// The final layer is purely linear so outputs can take any sign.
#[derive(Debug, Clone)]
pub struct Mlp<S> {
    layers: Vec<Linear<S>>,
    dims: Vec<usize>,
}

/// Per-layer activations saved by [`Mlp::forward`] for the backward pass.
#[derive(Debug)]
pub struct MlpCache<S> {
    /// Input to each layer (index 0 is the network input).
    inputs: Vec<Vec<S>>,
    /// Pre-activation output of each hidden layer.
    pre: Vec<Vec<S>>,
}

impl<S: Scalar> Mlp<S> {
    /// Build a network mapping `dims[0]` inputs to `dims.last()` outputs
    /// through `dims.len() - 2` hidden layers.
    pub fn new(name: &str, dims: &[usize], rng: &mut ChaCha8Rng) -> Self {
        assert!(dims.len() >= 2, "need at least input and output dims");
        assert!(dims.iter().all(|&d| d > 0), "zero-width layer");
        let layers = (0..dims.len() - 1)
            .map(|i| Linear::new(&format!("{name}.l{i}"), dims[i], dims[i + 1], rng))
            .collect();
        Mlp { layers, dims: dims.to_vec() }
    }

    pub fn in_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn out_dim(&self) -> usize {
        *self.dims.last().unwrap()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Forward `rows` stacked input vectors; returns `[rows, out_dim]`.
    pub fn forward(&self, x: &[S], rows: usize) -> (Vec<S>, MlpCache<S>) {
        assert_eq!(x.len(), rows * self.in_dim());
        let n_hidden = self.layers.len() - 1;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(n_hidden);
        let mut cur = x.to_vec();
        for (idx, layer) in self.layers.iter().enumerate() {
            inputs.push(cur.clone());
            let out = layer.forward(&cur, rows);
            if idx < n_hidden {
                pre.push(out.clone());
                cur = gelu_forward(&out);
            } else {
                cur = out;
            }
        }
        (cur, MlpCache { inputs, pre })
    }

    /// Accumulate parameter gradients for upstream gradient `dy`
    /// (`[rows, out_dim]`); returns the input gradient.
    pub fn backward(&mut self, cache: &MlpCache<S>, dy: &[S], rows: usize) -> Vec<S> {
        assert_eq!(dy.len(), rows * self.out_dim());
        let n_hidden = self.layers.len() - 1;
        let mut grad = dy.to_vec();
        for idx in (0..self.layers.len()).rev() {
            if idx < n_hidden {
                grad = gelu_backward(&cache.pre[idx], &grad);
            }
            grad = self.layers[idx].backward(&cache.inputs[idx], &grad, rows);
        }
        grad
    }

    /// Overwrite this network's parameters with `other`'s (shapes must match).
    pub fn copy_params_from(&mut self, other: &Self) {
        assert_eq!(self.dims, other.dims, "architecture mismatch");
        let mut theirs = Vec::new();
        other.visit_params(&mut |t| theirs.push(t.data.clone()));
        let mut cursor = 0;
        self.visit_params_mut(&mut |t| {
            t.data.copy_from_slice(&theirs[cursor]);
            cursor += 1;
        });
    }
}

impl<S: Scalar> ParamSet<S> for Mlp<S> {
    fn visit_params(&self, f: &mut dyn FnMut(&ParamTensor<S>)) {
        for layer in &self.layers {
            layer.visit_params(f);
        }
    }

    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&mut ParamTensor<S>)) {
        for layer in &mut self.layers {
            layer.visit_params_mut(f);
        }
    }
}
