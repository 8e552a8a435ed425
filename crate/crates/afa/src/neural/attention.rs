//! Multi-head self-attention with per-sequence key masking.
//!
//! Masked keys are excluded from the attention computation outright: their
//! pre-softmax scores are pushed down additively, the stabilizing max is
//! taken over unmasked scores only, their weights are re-zeroed after the
//! exponential, and the value sum skips them entirely. The content of a
//! masked position therefore cannot reach any output, bit for bit, no
//! matter how extreme its values are.

use rand_chacha::ChaCha8Rng;

use super::linear::Linear;
use super::{dot, ParamSet, ParamTensor, Scalar};

/// Additive penalty applied to masked pre-softmax scores.
const MASKED_SCORE_PENALTY: f64 = -1e9;

#[derive(Debug, Clone)]
pub struct MultiHeadAttention<S> {
    pub wq: Linear<S>,
    pub wk: Linear<S>,
    pub wv: Linear<S>,
    pub wo: Linear<S>,
    pub model_dim: usize,
    pub n_heads: usize,
    pub head_dim: usize,
}

/// Forward intermediates the backward pass needs.
pub struct MhaCache<S> {
    pub q: Vec<S>,
    pub k: Vec<S>,
    pub v: Vec<S>,
    /// Attention weights, [batch, heads, seq, seq]; exactly zero at masked keys.
    pub attn: Vec<S>,
    /// Concatenated per-head outputs before the output projection.
    pub concat: Vec<S>,
}

impl<S: Scalar> MultiHeadAttention<S> {
    pub fn new(name: &str, model_dim: usize, n_heads: usize, rng: &mut ChaCha8Rng) -> Self {
        assert!(
            n_heads > 0 && model_dim % n_heads == 0,
            "model_dim {model_dim} must be divisible by n_heads {n_heads}"
        );
        MultiHeadAttention {
            wq: Linear::new(&format!("{name}.wq"), model_dim, model_dim, rng),
            wk: Linear::new(&format!("{name}.wk"), model_dim, model_dim, rng),
            wv: Linear::new(&format!("{name}.wv"), model_dim, model_dim, rng),
            wo: Linear::new(&format!("{name}.wo"), model_dim, model_dim, rng),
            model_dim,
            n_heads,
            head_dim: model_dim / n_heads,
        }
    }

    /// `x` is [batch * seq, model_dim]; `key_mask` is [batch * seq], true
    /// for positions that may be attended to. Every sequence must keep at
    /// least one unmasked key.
    pub fn forward(
        &self,
        x: &[S],
        batch: usize,
        seq: usize,
        key_mask: &[bool],
    ) -> (Vec<S>, MhaCache<S>) {
        let dm = self.model_dim;
        let hd = self.head_dim;
        let rows = batch * seq;
        debug_assert_eq!(x.len(), rows * dm);
        debug_assert_eq!(key_mask.len(), rows);

        let q = self.wq.forward(x, rows);
        let k = self.wk.forward(x, rows);
        let v = self.wv.forward(x, rows);
        let scale = S::from_f64(1.0 / (hd as f64).sqrt());
        let penalty = S::from_f64(MASKED_SCORE_PENALTY);

        let mut attn = vec![S::zero(); batch * self.n_heads * seq * seq];
        let mut concat = vec![S::zero(); rows * dm];
        let mut scores = vec![S::zero(); seq];
        for b in 0..batch {
            let mask = &key_mask[b * seq..(b + 1) * seq];
            assert!(
                mask.iter().any(|&m| m),
                "every sequence needs at least one unmasked key"
            );
            for h in 0..self.n_heads {
                let off = h * hd;
                for t1 in 0..seq {
                    let q_slice = &q[(b * seq + t1) * dm + off..(b * seq + t1) * dm + off + hd];
                    let mut max = S::neg_infinity();
                    for t2 in 0..seq {
                        let k_slice = &k[(b * seq + t2) * dm + off..(b * seq + t2) * dm + off + hd];
                        let raw = dot(q_slice, k_slice) * scale;
                        if mask[t2] {
                            scores[t2] = raw;
                            max = max.max(raw);
                        } else {
                            scores[t2] = raw + penalty;
                        }
                    }
                    let w_row = &mut attn[((b * self.n_heads + h) * seq + t1) * seq
                        ..((b * self.n_heads + h) * seq + t1) * seq + seq];
                    let mut sum = S::zero();
                    for t2 in 0..seq {
                        w_row[t2] = if mask[t2] {
                            (scores[t2] - max).exp()
                        } else {
                            S::zero()
                        };
                        sum += w_row[t2];
                    }
                    for w in w_row.iter_mut() {
                        *w /= sum;
                    }
                    let out =
                        &mut concat[(b * seq + t1) * dm + off..(b * seq + t1) * dm + off + hd];
                    for t2 in 0..seq {
                        if !mask[t2] {
                            continue;
                        }
                        let w = w_row[t2];
                        let v_slice = &v[(b * seq + t2) * dm + off..(b * seq + t2) * dm + off + hd];
                        for j in 0..hd {
                            out[j] += w * v_slice[j];
                        }
                    }
                }
            }
        }
        let y = self.wo.forward(&concat, rows);
        (y, MhaCache { q, k, v, attn, concat })
    }

    /// Accumulates all projection gradients, returns dx.
    pub fn backward(
        &mut self,
        x: &[S],
        cache: &MhaCache<S>,
        dy: &[S],
        batch: usize,
        seq: usize,
        key_mask: &[bool],
    ) -> Vec<S> {
        let dm = self.model_dim;
        let hd = self.head_dim;
        let rows = batch * seq;
        debug_assert_eq!(dy.len(), rows * dm);

        let dconcat = self.wo.backward(&cache.concat, dy, rows);
        let mut dq = vec![S::zero(); rows * dm];
        let mut dk = vec![S::zero(); rows * dm];
        let mut dv = vec![S::zero(); rows * dm];
        let scale = S::from_f64(1.0 / (hd as f64).sqrt());

        let mut dw = vec![S::zero(); seq];
        for b in 0..batch {
            let mask = &key_mask[b * seq..(b + 1) * seq];
            for h in 0..self.n_heads {
                let off = h * hd;
                for t1 in 0..seq {
                    let row = b * seq + t1;
                    let dout = &dconcat[row * dm + off..row * dm + off + hd];
                    let w_row = &cache.attn[((b * self.n_heads + h) * seq + t1) * seq
                        ..((b * self.n_heads + h) * seq + t1) * seq + seq];
                    // dL/dw and dL/dv for every visible key.
                    let mut wdw = S::zero();
                    for t2 in 0..seq {
                        if !mask[t2] {
                            dw[t2] = S::zero();
                            continue;
                        }
                        let key_row = b * seq + t2;
                        let v_slice = &cache.v[key_row * dm + off..key_row * dm + off + hd];
                        dw[t2] = dot(dout, v_slice);
                        wdw += w_row[t2] * dw[t2];
                        let dv_slice = &mut dv[key_row * dm + off..key_row * dm + off + hd];
                        for j in 0..hd {
                            dv_slice[j] += w_row[t2] * dout[j];
                        }
                    }
                    // Softmax Jacobian, then the score products.
                    let q_slice = &cache.q[row * dm + off..row * dm + off + hd];
                    for t2 in 0..seq {
                        if !mask[t2] {
                            continue;
                        }
                        let dscore = w_row[t2] * (dw[t2] - wdw) * scale;
                        let key_row = b * seq + t2;
                        let k_slice = &cache.k[key_row * dm + off..key_row * dm + off + hd];
                        let dq_slice = &mut dq[row * dm + off..row * dm + off + hd];
                        for j in 0..hd {
                            dq_slice[j] += dscore * k_slice[j];
                        }
                        let dk_slice = &mut dk[key_row * dm + off..key_row * dm + off + hd];
                        for j in 0..hd {
                            dk_slice[j] += dscore * q_slice[j];
                        }
                    }
                }
            }
        }

        let mut dx = self.wq.backward(x, &dq, rows);
        let dxk = self.wk.backward(x, &dk, rows);
        let dxv = self.wv.backward(x, &dv, rows);
        for i in 0..dx.len() {
            dx[i] += dxk[i] + dxv[i];
        }
        dx
    }
}

impl<S: Scalar> ParamSet<S> for MultiHeadAttention<S> {
    fn visit_params(&self, f: &mut dyn FnMut(&ParamTensor<S>)) {
        self.wq.visit_params(f);
        self.wk.visit_params(f);
        self.wv.visit_params(f);
        self.wo.visit_params(f);
    }

    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&mut ParamTensor<S>)) {
        self.wq.visit_params_mut(f);
        self.wk.visit_params_mut(f);
        self.wv.visit_params_mut(f);
        self.wo.visit_params_mut(f);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;

    fn identity_mha() -> MultiHeadAttention<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut mha = MultiHeadAttention::<f64>::new("attn", 1, 1, &mut rng);
        for l in [&mut mha.wq, &mut mha.wk, &mut mha.wv, &mut mha.wo] {
            l.w.data = vec![1.0];
            l.b.data = vec![0.0];
        }
        mha
    }

    #[test]
    fn scalar_head_matches_direct_softmax() {
        let mha = identity_mha();
        let (a, b) = (0.8, -0.3);
        let (y, cache) = mha.forward(&[a, b], 1, 2, &[true, true]);
        // Row 1 scores are [a*a, a*b]; weights from a plain softmax.
        let direct = |s1: f64, s2: f64| {
            let m = s1.max(s2);
            let (e1, e2) = ((s1 - m).exp(), (s2 - m).exp());
            (e1 / (e1 + e2), e2 / (e1 + e2))
        };
        let (w11, w12) = direct(a * a, a * b);
        let (w21, w22) = direct(b * a, b * b);
        assert!((y[0] - (w11 * a + w12 * b)).abs() < 1e-15);
        assert!((y[1] - (w21 * a + w22 * b)).abs() < 1e-15);
        assert!((cache.attn[0] - w11).abs() < 1e-15);
        assert!((cache.attn[3] - w22).abs() < 1e-15);
    }

    #[test]
    fn single_visible_key_dominates_exactly() {
        let mha = identity_mha();
        let (y, cache) = mha.forward(&[0.8, -0.3], 1, 2, &[true, false]);
        // Every query sees only key 1, so both outputs equal its value.
        assert_eq!(y, vec![0.8, 0.8]);
        assert_eq!(&cache.attn[..], &[1.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn masked_content_cannot_reach_any_output() {
        let mha = identity_mha();
        let mask = [true, false];
        let (y1, _) = mha.forward(&[0.8, -0.3], 1, 2, &mask);
        let (y2, _) = mha.forward(&[0.8, 1.0e30], 1, 2, &mask);
        assert_eq!(y1, y2);
    }

    #[test]
    #[should_panic(expected = "at least one unmasked key")]
    fn fully_masked_sequence_is_rejected() {
        let mha = identity_mha();
        mha.forward(&[0.8, -0.3], 1, 2, &[false, false]);
    }

    #[test]
    fn backward_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut mha = MultiHeadAttention::<f64>::new("attn", 6, 2, &mut rng);
        let batch = 2;
        let seq = 3;
        let dm = 6;
        let x: Vec<f64> = (0..batch * seq * dm)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let mask = [true, true, false, true, true, true];
        let weights: Vec<f64> = (0..batch * seq * dm)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let loss = |mha: &MultiHeadAttention<f64>, x: &[f64]| -> f64 {
            let (y, _) = mha.forward(x, batch, seq, &mask);
            y.iter().zip(&weights).map(|(v, w)| v * w).sum()
        };

        let (_, cache) = mha.forward(&x, batch, seq, &mask);
        let dx = mha.backward(&x, &cache, &weights, batch, seq, &mask);

        let h = 1e-6;
        for i in 0..x.len() {
            let mut xp = x.clone();
            xp[i] += h;
            let mut xm = x.clone();
            xm[i] -= h;
            let fd = (loss(&mha, &xp) - loss(&mha, &xm)) / (2.0 * h);
            assert!((dx[i] - fd).abs() < 1e-7, "dx[{i}]: {} vs {fd}", dx[i]);
        }

        // Probe every projection parameter.
        let n_params = {
            let mut n = 0;
            mha.visit_params(&mut |p| n += p.len());
            n
        };
        let mut analytic = Vec::with_capacity(n_params);
        mha.visit_params(&mut |p| analytic.extend(p.grad.iter().cloned()));
        let mut idx = 0;
        for t in 0..8 {
            let len = {
                let mut lens = Vec::new();
                mha.visit_params(&mut |p| lens.push(p.len()));
                lens[t]
            };
            for i in 0..len {
                let read = |mha: &mut MultiHeadAttention<f64>, delta: f64| -> f64 {
                    let mut cnt = 0;
                    let mut orig = 0.0;
                    mha.visit_params_mut(&mut |p| {
                        if cnt == t {
                            orig = p.data[i];
                            p.data[i] += delta;
                        }
                        cnt += 1;
                    });
                    orig
                };
                read(&mut mha, h);
                let lp = loss(&mha, &x);
                read(&mut mha, -2.0 * h);
                let lm = loss(&mha, &x);
                read(&mut mha, h);
                let fd = (lp - lm) / (2.0 * h);
                assert!(
                    (analytic[idx] - fd).abs() < 1e-6,
                    "param tensor {t} index {i}: {} vs {fd}",
                    analytic[idx]
                );
                idx += 1;
            }
        }
        assert_eq!(idx, n_params);
    }

    #[test]
    fn mask_zeroes_attention_weights_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mha = MultiHeadAttention::<f64>::new("attn", 4, 2, &mut rng);
        let x: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mask = [true, false, true];
        let (_, cache) = mha.forward(&x, 1, 3, &mask);
        for h in 0..2 {
            for t1 in 0..3 {
                let row = &cache.attn[(h * 3 + t1) * 3..(h * 3 + t1) * 3 + 3];
                assert_eq!(row[1], 0.0);
                let sum: f64 = row.iter().sum();
                assert!((sum - 1.0).abs() < 1e-12);
            }
        }
    }
}
