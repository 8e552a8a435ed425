//! Pre-norm transformer encoder block.

use rand_chacha::ChaCha8Rng;

use super::attention::{MhaCache, MultiHeadAttention};
use super::linear::Linear;
use super::norm::{LayerNorm, LnCache};
use super::ops::{gelu_backward, gelu_forward};
use super::{ParamSet, ParamTensor, Scalar};

/// x + attn(ln(x)) followed by x + ffn(ln(x)), with a GELU inside the ffn.
#[derive(Debug, Clone)]
pub struct EncoderBlock<S> {
    pub ln1: LayerNorm<S>,
    pub attn: MultiHeadAttention<S>,
    pub ln2: LayerNorm<S>,
    pub w1: Linear<S>,
    pub w2: Linear<S>,
}

pub struct BlockCache<S> {
    ln1_cache: LnCache<S>,
    ln1_out: Vec<S>,
    attn_cache: MhaCache<S>,
    ln2_cache: LnCache<S>,
    ln2_out: Vec<S>,
    pre: Vec<S>,
    act: Vec<S>,
}

impl<S: Scalar> EncoderBlock<S> {
    pub fn new(
        name: &str,
        model_dim: usize,
        n_heads: usize,
        ff_dim: usize,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        EncoderBlock {
            ln1: LayerNorm::new(&format!("{name}.ln1"), model_dim),
            attn: MultiHeadAttention::new(&format!("{name}.attn"), model_dim, n_heads, rng),
            ln2: LayerNorm::new(&format!("{name}.ln2"), model_dim),
            w1: Linear::new(&format!("{name}.ffn1"), model_dim, ff_dim, rng),
            w2: Linear::new(&format!("{name}.ffn2"), ff_dim, model_dim, rng),
        }
    }

    pub fn forward(
        &self,
        x: &[S],
        batch: usize,
        seq: usize,
        key_mask: &[bool],
    ) -> (Vec<S>, BlockCache<S>) {
        let rows = batch * seq;
        let (ln1_out, ln1_cache) = self.ln1.forward(x, rows);
        let (attn_out, attn_cache) = self.attn.forward(&ln1_out, batch, seq, key_mask);
        let mut h1 = x.to_vec();
        for i in 0..h1.len() {
            h1[i] += attn_out[i];
        }
        let (ln2_out, ln2_cache) = self.ln2.forward(&h1, rows);
        let pre = self.w1.forward(&ln2_out, rows);
        let act = gelu_forward(&pre);
        let ffn_out = self.w2.forward(&act, rows);
        let mut h2 = h1;
        for i in 0..h2.len() {
            h2[i] += ffn_out[i];
        }
        (
            h2,
            BlockCache {
                ln1_cache,
                ln1_out,
                attn_cache,
                ln2_cache,
                ln2_out,
                pre,
                act,
            },
        )
    }

    /// Accumulates gradients for every sublayer, returns dx.
    pub fn backward(
        &mut self,
        cache: &BlockCache<S>,
        dh2: &[S],
        batch: usize,
        seq: usize,
        key_mask: &[bool],
    ) -> Vec<S> {
        let rows = batch * seq;
        let dact = self.w2.backward(&cache.act, dh2, rows);
        let dpre = gelu_backward(&cache.pre, &dact);
        let dln2_out = self.w1.backward(&cache.ln2_out, &dpre, rows);
        let mut dh1 = self.ln2.backward(&cache.ln2_cache, &dln2_out);
        for i in 0..dh1.len() {
            dh1[i] += dh2[i];
        }
        let dln1_out = self
            .attn
            .backward(&cache.ln1_out, &cache.attn_cache, &dh1, batch, seq, key_mask);
        let mut dx = self.ln1.backward(&cache.ln1_cache, &dln1_out);
        for i in 0..dx.len() {
            dx[i] += dh1[i];
        }
        dx
    }
}

impl<S: Scalar> ParamSet<S> for EncoderBlock<S> {
    fn visit_params(&self, f: &mut dyn FnMut(&ParamTensor<S>)) {
        self.ln1.visit_params(f);
        self.attn.visit_params(f);
        self.ln2.visit_params(f);
        self.w1.visit_params(f);
        self.w2.visit_params(f);
    }

    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&mut ParamTensor<S>)) {
        self.ln1.visit_params_mut(f);
        self.attn.visit_params_mut(f);
        self.ln2.visit_params_mut(f);
        self.w1.visit_params_mut(f);
        self.w2.visit_params_mut(f);
    }
}
