//! Fully connected layer.

use rand_chacha::ChaCha8Rng;

use super::{matmul_acc, matmul_at_acc, matmul_bt, ParamSet, ParamTensor, Scalar};

/// y = x W + b with W stored row-major as [in_dim, out_dim].
#[derive(Debug, Clone)]
pub struct Linear<S> {
    pub w: ParamTensor<S>,
    pub b: ParamTensor<S>,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl<S: Scalar> Linear<S> {
    /// Weights drawn uniformly from (-1/sqrt(in), 1/sqrt(in)); zero biases.
    pub fn new(name: &str, in_dim: usize, out_dim: usize, rng: &mut ChaCha8Rng) -> Self {
        let bound = 1.0 / (in_dim as f64).sqrt();
        Linear {
            w: ParamTensor::init_uniform(format!("{name}.w"), vec![in_dim, out_dim], bound, rng),
            b: ParamTensor::zeros(format!("{name}.b"), vec![out_dim]),
            in_dim,
            out_dim,
        }
    }

    pub fn forward(&self, x: &[S], rows: usize) -> Vec<S> {
        debug_assert_eq!(x.len(), rows * self.in_dim);
        let mut y = vec![S::zero(); rows * self.out_dim];
        for r in 0..rows {
            y[r * self.out_dim..(r + 1) * self.out_dim].copy_from_slice(&self.b.data);
        }
        matmul_acc(x, &self.w.data, &mut y, rows, self.in_dim, self.out_dim);
        y
    }

    /// Accumulates dW and db, returns dx. `x` must be the forward input.
    pub fn backward(&mut self, x: &[S], dy: &[S], rows: usize) -> Vec<S> {
        debug_assert_eq!(x.len(), rows * self.in_dim);
        debug_assert_eq!(dy.len(), rows * self.out_dim);
        matmul_at_acc(x, dy, &mut self.w.grad, rows, self.in_dim, self.out_dim);
        for r in 0..rows {
            let dy_row = &dy[r * self.out_dim..(r + 1) * self.out_dim];
            for (g, &d) in self.b.grad.iter_mut().zip(dy_row) {
                *g += d;
            }
        }
        matmul_bt(dy, &self.w.data, rows, self.out_dim, self.in_dim)
    }
}

impl<S: Scalar> ParamSet<S> for Linear<S> {
    fn visit_params(&self, f: &mut dyn FnMut(&ParamTensor<S>)) {
        f(&self.w);
        f(&self.b);
    }

    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&mut ParamTensor<S>)) {
        f(&mut self.w);
        f(&mut self.b);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;

    #[test]
    fn forward_matches_hand_computation() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut layer = Linear::<f64>::new("l", 2, 3, &mut rng);
        layer.w.data = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]; // [[1,2,3],[4,5,6]]
        layer.b.data = vec![0.5, -0.5, 0.0];
        let y = layer.forward(&[1.0, 1.0, 2.0, 0.0], 2);
        assert_eq!(y, vec![5.5, 6.5, 9.0, 2.5, 3.5, 6.0]);
    }

    #[test]
    fn backward_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut layer = Linear::<f64>::new("l", 3, 2, &mut rng);
        let x = [0.3, -0.7, 1.1, 0.4, 0.9, -1.3];
        // Scalar probe loss: sum of squares of the outputs.
        let loss = |layer: &Linear<f64>, x: &[f64]| -> f64 {
            layer.forward(x, 2).iter().map(|v| v * v).sum()
        };
        let y = layer.forward(&x, 2);
        let dy: Vec<f64> = y.iter().map(|v| 2.0 * v).collect();
        let dx = layer.backward(&x, &dy, 2);

        let h = 1e-6;
        for i in 0..x.len() {
            let mut xp = x;
            xp[i] += h;
            let mut xm = x;
            xm[i] -= h;
            let fd = (loss(&layer, &xp) - loss(&layer, &xm)) / (2.0 * h);
            assert!((dx[i] - fd).abs() < 1e-7, "dx[{i}]");
        }
        for i in 0..layer.w.data.len() {
            let orig = layer.w.data[i];
            layer.w.data[i] = orig + h;
            let lp = loss(&layer, &x);
            layer.w.data[i] = orig - h;
            let lm = loss(&layer, &x);
            layer.w.data[i] = orig;
            let fd = (lp - lm) / (2.0 * h);
            assert!((layer.w.grad[i] - fd).abs() < 1e-6, "dw[{i}]");
        }
        for i in 0..layer.b.data.len() {
            let orig = layer.b.data[i];
            layer.b.data[i] = orig + h;
            let lp = loss(&layer, &x);
            layer.b.data[i] = orig - h;
            let lm = loss(&layer, &x);
            layer.b.data[i] = orig;
            let fd = (lp - lm) / (2.0 * h);
            assert!((layer.b.grad[i] - fd).abs() < 1e-6, "db[{i}]");
        }
    }

    #[test]
    fn gradients_accumulate_across_calls() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut layer = Linear::<f64>::new("l", 2, 2, &mut rng);
        let x = [1.0, 2.0];
        let dy = [1.0, 1.0];
        layer.backward(&x, &dy, 1);
        let first = layer.w.grad.clone();
        layer.backward(&x, &dy, 1);
        for (a, b) in layer.w.grad.iter().zip(&first) {
            assert!((a - 2.0 * b).abs() < 1e-15);
        }
    }
}
