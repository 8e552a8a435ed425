//! Layer normalization over the last dimension.

use super::{ParamSet, ParamTensor, Scalar};

pub const LN_EPS: f64 = 1e-5;

#[derive(Debug, Clone)]
pub struct LayerNorm<S> {
    pub g: ParamTensor<S>,
    pub b: ParamTensor<S>,
    pub dim: usize,
}

/// Per-row values the backward pass needs.
pub struct LnCache<S> {
    pub xhat: Vec<S>,
    pub rstd: Vec<S>,
}

impl<S: Scalar> LayerNorm<S> {
    pub fn new(name: &str, dim: usize) -> Self {
        let mut g = ParamTensor::zeros(format!("{name}.g"), vec![dim]);
        g.data.fill(S::one());
        LayerNorm {
            g,
            b: ParamTensor::zeros(format!("{name}.b"), vec![dim]),
            dim,
        }
    }

    pub fn forward(&self, x: &[S], rows: usize) -> (Vec<S>, LnCache<S>) {
        let dim = self.dim;
        debug_assert_eq!(x.len(), rows * dim);
        let inv_dim = S::one() / S::from_f64(dim as f64);
        let eps = S::from_f64(LN_EPS);
        let mut y = vec![S::zero(); rows * dim];
        let mut xhat = vec![S::zero(); rows * dim];
        let mut rstd = vec![S::zero(); rows];
        for r in 0..rows {
            let row = &x[r * dim..(r + 1) * dim];
            let mut mean = S::zero();
            for &v in row {
                mean += v;
            }
            mean *= inv_dim;
            let mut var = S::zero();
            for &v in row {
                let d = v - mean;
                var += d * d;
            }
            var *= inv_dim;
            let rs = S::one() / (var + eps).sqrt();
            rstd[r] = rs;
            for j in 0..dim {
                let xh = (row[j] - mean) * rs;
                xhat[r * dim + j] = xh;
                y[r * dim + j] = self.g.data[j] * xh + self.b.data[j];
            }
        }
        (y, LnCache { xhat, rstd })
    }

    /// Accumulates dg and db, returns dx.
    pub fn backward(&mut self, cache: &LnCache<S>, dy: &[S]) -> Vec<S> {
        let dim = self.dim;
        let rows = cache.rstd.len();
        debug_assert_eq!(dy.len(), rows * dim);
        let inv_dim = S::one() / S::from_f64(dim as f64);
        let mut dx = vec![S::zero(); rows * dim];
        for r in 0..rows {
            let dy_row = &dy[r * dim..(r + 1) * dim];
            let xhat_row = &cache.xhat[r * dim..(r + 1) * dim];
            let mut mean_dxhat = S::zero();
            let mut mean_dxhat_xhat = S::zero();
            for j in 0..dim {
                let dxhat = dy_row[j] * self.g.data[j];
                mean_dxhat += dxhat;
                mean_dxhat_xhat += dxhat * xhat_row[j];
                self.g.grad[j] += dy_row[j] * xhat_row[j];
                self.b.grad[j] += dy_row[j];
            }
            mean_dxhat *= inv_dim;
            mean_dxhat_xhat *= inv_dim;
            let rs = cache.rstd[r];
            for j in 0..dim {
                let dxhat = dy_row[j] * self.g.data[j];
                dx[r * dim + j] = rs * (dxhat - mean_dxhat - xhat_row[j] * mean_dxhat_xhat);
            }
        }
        dx
    }
}

impl<S: Scalar> ParamSet<S> for LayerNorm<S> {
    fn visit_params(&self, f: &mut dyn FnMut(&ParamTensor<S>)) {
        f(&self.g);
        f(&self.b);
    }

    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&mut ParamTensor<S>)) {
        f(&mut self.g);
        f(&mut self.b);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn output_is_standardized() {
        let ln = LayerNorm::<f64>::new("ln", 4);
        let (y, _) = ln.forward(&[1.0, 2.0, 3.0, 4.0, -5.0, 0.0, 5.0, 10.0], 2);
        for r in 0..2 {
            let row = &y[r * 4..(r + 1) * 4];
            let mean: f64 = row.iter().sum::<f64>() / 4.0;
            let var: f64 = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 4.0;
            assert!(mean.abs() < 1e-12);
            assert!((var - 1.0).abs() < 1e-4); // off by the eps regularizer
        }
    }

    #[test]
    fn shift_invariance() {
        let ln = LayerNorm::<f64>::new("ln", 3);
        let (a, _) = ln.forward(&[0.2, -1.0, 0.5], 1);
        let (b, _) = ln.forward(&[100.2, 99.0, 100.5], 1);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn backward_matches_central_differences() {
        let mut ln = LayerNorm::<f64>::new("ln", 5);
        // Non-trivial gain/bias so their gradients are exercised too.
        for j in 0..5 {
            ln.g.data[j] = 0.5 + 0.3 * j as f64;
            ln.b.data[j] = -0.2 + 0.1 * j as f64;
        }
        let x = [0.3, -0.7, 1.1, 0.4, 0.9, -1.3, 0.2, 0.0, 2.0, -0.5];
        let weights: Vec<f64> = (0..10).map(|i| 0.1 * i as f64 - 0.45).collect();
        let loss = |ln: &LayerNorm<f64>, x: &[f64]| -> f64 {
            let (y, _) = ln.forward(x, 2);
            y.iter().zip(&weights).map(|(v, w)| v * w).sum()
        };
        let (_, cache) = ln.forward(&x, 2);
        let dx = ln.backward(&cache, &weights);

        let h = 1e-6;
        for i in 0..x.len() {
            let mut xp = x;
            xp[i] += h;
            let mut xm = x;
            xm[i] -= h;
            let fd = (loss(&ln, &xp) - loss(&ln, &xm)) / (2.0 * h);
            assert!((dx[i] - fd).abs() < 1e-8, "dx[{i}]: {} vs {fd}", dx[i]);
        }
        for j in 0..5 {
            let orig = ln.g.data[j];
            ln.g.data[j] = orig + h;
            let lp = loss(&ln, &x);
            ln.g.data[j] = orig - h;
            let lm = loss(&ln, &x);
            ln.g.data[j] = orig;
            let fd = (lp - lm) / (2.0 * h);
            assert!((ln.g.grad[j] - fd).abs() < 1e-8, "dg[{j}]");
        }
        for j in 0..5 {
            let orig = ln.b.data[j];
            ln.b.data[j] = orig + h;
            let lp = loss(&ln, &x);
            ln.b.data[j] = orig - h;
            let lm = loss(&ln, &x);
            ln.b.data[j] = orig;
            let fd = (lp - lm) / (2.0 * h);
            assert!((ln.b.grad[j] - fd).abs() < 1e-8, "db[{j}]");
        }
    }
}
