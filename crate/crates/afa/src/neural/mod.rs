//! Hand-written neural network substrate.
//!
//! Everything is generic over the floating-point type: training and
//! inference run in `f32`, while gradient checking instantiates the exact
//! same code in `f64` so central differences have enough headroom to
//! resolve analytic gradients. All reductions accumulate in a fixed order,
//! so results are reproducible bit for bit from run to run.

pub mod adam;
pub mod attention;
pub mod checkpoint;
pub mod encoder;
pub mod gradcheck;
pub mod linear;
pub mod mlp;
pub mod norm;
pub mod ops;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Floating-point element type of a network.
pub trait Scalar:
    num_traits::Float
    + num_traits::NumAssignOps
    + std::iter::Sum
    + std::fmt::Debug
    + std::fmt::Display
    + Send
    + Sync
    + 'static
{
    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
    fn from_f32(v: f32) -> Self;
    fn to_f32(self) -> f32;
}

impl Scalar for f32 {
    fn from_f64(v: f64) -> f32 {
        v as f32
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
    fn from_f32(v: f32) -> f32 {
        v
    }
    fn to_f32(self) -> f32 {
        self
    }
}

impl Scalar for f64 {
    fn from_f64(v: f64) -> f64 {
        v
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn from_f32(v: f32) -> f64 {
        v as f64
    }
    fn to_f32(self) -> f32 {
        self as f32
    }
}

/// A named parameter tensor with its gradient accumulator.
#[derive(Debug, Clone)]
pub struct ParamTensor<S> {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<S>,
    pub grad: Vec<S>,
}

impl<S: Scalar> ParamTensor<S> {
    pub fn zeros(name: impl Into<String>, shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        ParamTensor {
            name: name.into(),
            shape,
            data: vec![S::zero(); len],
            grad: vec![S::zero(); len],
        }
    }

    /// Uniform init on (-bound, bound), drawn in f64 so every scalar type
    /// sees the same values.
    pub fn init_uniform(
        name: impl Into<String>,
        shape: Vec<usize>,
        bound: f64,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let mut t = Self::zeros(name, shape);
        for v in &mut t.data {
            *v = S::from_f64(rng.random_range(-bound..=bound));
        }
        t
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(S::zero());
    }
}

/// Anything that owns parameter tensors and can walk them in a stable
/// order. The optimizer, checkpoints, and the gradient checker all rely on
/// that order never changing for a given architecture.
pub trait ParamSet<S: Scalar> {
    fn visit_params(&self, f: &mut dyn FnMut(&ParamTensor<S>));
    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&mut ParamTensor<S>));
}

pub fn zero_grads<S: Scalar>(model: &mut dyn ParamSet<S>) {
    model.visit_params_mut(&mut |p| p.zero_grad());
}

pub fn param_count<S: Scalar>(model: &dyn ParamSet<S>) -> usize {
    let mut n = 0;
    model.visit_params(&mut |p| n += p.len());
    n
}

/// Name of the first parameter holding a non-finite gradient, if any.
pub fn non_finite_grad<S: Scalar>(model: &dyn ParamSet<S>) -> Option<String> {
    let mut bad = None;
    model.visit_params(&mut |p| {
        if bad.is_none() && p.grad.iter().any(|g| !g.is_finite()) {
            bad = Some(p.name.clone());
        }
    });
    bad
}

/// Dot product with a fixed four-way unrolled accumulation order.
pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len();
    let chunks = n / 4;
    let (mut s0, mut s1, mut s2, mut s3) = (S::zero(), S::zero(), S::zero(), S::zero());
    for c in 0..chunks {
        let i = 4 * c;
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    let mut rest = S::zero();
    for i in 4 * chunks..n {
        rest += a[i] * b[i];
    }
    ((s0 + s1) + (s2 + s3)) + rest
}

/// C[m,n] += A[m,k] * B[k,n]. The k loop is outermost per row, so each
/// output element accumulates in index order regardless of vector width.
pub fn matmul_acc<S: Scalar>(a: &[S], b: &[S], c: &mut [S], m: usize, k: usize, n: usize) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    for i in 0..m {
        let c_row = &mut c[i * n..(i + 1) * n];
        for kk in 0..k {
            let a_ik = a[i * k + kk];
            let b_row = &b[kk * n..(kk + 1) * n];
            for j in 0..n {
                c_row[j] += a_ik * b_row[j];
            }
        }
    }
}

/// C[m,n] = A[m,k] * B[k,n].
pub fn matmul<S: Scalar>(a: &[S], b: &[S], m: usize, k: usize, n: usize) -> Vec<S> {
    let mut c = vec![S::zero(); m * n];
    matmul_acc(a, b, &mut c, m, k, n);
    c
}

/// C[m,n] = A[m,k] * B^T where B is stored [n,k]: row-by-row dot products.
pub fn matmul_bt<S: Scalar>(a: &[S], b: &[S], m: usize, k: usize, n: usize) -> Vec<S> {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), n * k);
    let mut c = vec![S::zero(); m * n];
    for i in 0..m {
        let a_row = &a[i * k..(i + 1) * k];
        for j in 0..n {
            c[i * n + j] = dot(a_row, &b[j * k..(j + 1) * k]);
        }
    }
    c
}

/// C[k,n] += A^T * B where A is [m,k] and B is [m,n]: the weight-gradient
/// product, accumulated row-pair by row-pair in batch order.
pub fn matmul_at_acc<S: Scalar>(a: &[S], b: &[S], c: &mut [S], m: usize, k: usize, n: usize) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), m * n);
    debug_assert_eq!(c.len(), k * n);
    for i in 0..m {
        let b_row = &b[i * n..(i + 1) * n];
        for kk in 0..k {
            let a_ik = a[i * k + kk];
            let c_row = &mut c[kk * n..(kk + 1) * n];
            for j in 0..n {
                c_row[j] += a_ik * b_row[j];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_matches_hand_computation() {
        // [1 2 3; 4 5 6] * [7 8; 9 10; 11 12] = [58 64; 139 154]
        let a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let b = [7.0, 8.0, 9.0, 10.0, 11.0, 12.0];
        let c = matmul(&a, &b, 2, 3, 2);
        assert_eq!(c, vec![58.0, 64.0, 139.0, 154.0]);
    }

    #[test]
    fn matmul_bt_matches_plain_matmul() {
        // A * B^T computed both ways on small random-ish values.
        let a: Vec<f64> = (0..6).map(|i| (i as f64) * 0.3 - 0.7).collect(); // 2x3
        let b: Vec<f64> = (0..12).map(|i| (i as f64) * 0.1 + 0.05).collect(); // 4x3
        let bt: Vec<f64> = {
            let mut t = vec![0.0; 12]; // 3x4
            for r in 0..4 {
                for c in 0..3 {
                    t[c * 4 + r] = b[r * 3 + c];
                }
            }
            t
        };
        let via_bt = matmul_bt(&a, &b, 2, 3, 4);
        let via_plain = matmul(&a, &bt, 2, 3, 4);
        for (x, y) in via_bt.iter().zip(&via_plain) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn matmul_at_matches_explicit_transpose() {
        let a: Vec<f64> = (0..6).map(|i| (i as f64) - 2.5).collect(); // 3x2
        let b: Vec<f64> = (0..9).map(|i| (i as f64) * 0.5).collect(); // 3x3
        let mut c = vec![0.0; 6]; // 2x3
        matmul_at_acc(&a, &b, &mut c, 3, 2, 3);
        let at: Vec<f64> = {
            let mut t = vec![0.0; 6]; // 2x3
            for r in 0..3 {
                for k in 0..2 {
                    t[k * 3 + r] = a[r * 2 + k];
                }
            }
            t
        };
        let expected = matmul(&at, &b, 2, 3, 3);
        for (x, y) in c.iter().zip(&expected) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn dot_handles_all_remainders() {
        for n in 0..9 {
            let a: Vec<f64> = (0..n).map(|i| i as f64 + 1.0).collect();
            let b: Vec<f64> = (0..n).map(|i| 2.0 * i as f64 - 3.0).collect();
            let expected: f64 = (0..n).map(|i| a[i] * b[i]).sum();
            assert!((dot(&a, &b) - expected).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        use rand_chacha::rand_core::SeedableRng;
        let mut r1 = ChaCha8Rng::seed_from_u64(7);
        let mut r2 = ChaCha8Rng::seed_from_u64(7);
        let a = ParamTensor::<f32>::init_uniform("w", vec![4, 4], 0.5, &mut r1);
        let b = ParamTensor::<f32>::init_uniform("w", vec![4, 4], 0.5, &mut r2);
        assert_eq!(a.data, b.data);
        assert!(a.data.iter().all(|v| v.abs() <= 0.5));
        assert_eq!(a.len(), 16);
        assert!(a.grad.iter().all(|&g| g == 0.0));
    }
}
