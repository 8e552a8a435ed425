//! Adam optimizer with bias correction.

use serde::{Deserialize, Serialize};

use super::{ParamSet, Scalar};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Optimizer state: first/second moment per parameter tensor, in the
/// model's stable visitation order.
#[derive(Debug, Clone)]
pub struct Adam<S> {
    pub cfg: AdamConfig,
    t: u64,
    m: Vec<Vec<S>>,
    v: Vec<Vec<S>>,
}

impl<S: Scalar> Adam<S> {
    pub fn new(cfg: AdamConfig) -> Self {
        Adam {
            cfg,
            t: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.t
    }

    /// One update from the gradients currently stored in the model.
    /// Rejects non-finite gradients instead of corrupting the parameters.
    pub fn step(&mut self, model: &mut dyn ParamSet<S>) -> Result<()> {
        if self.m.is_empty() {
            model.visit_params(&mut |p| {
                self.m.push(vec![S::zero(); p.len()]);
                self.v.push(vec![S::zero(); p.len()]);
            });
        }
        let mut bad: Option<String> = None;
        model.visit_params(&mut |p| {
            if bad.is_none() && p.grad.iter().any(|g| !g.is_finite()) {
                bad = Some(p.name.clone());
            }
        });
        if let Some(param) = bad {
            return Err(Error::NonFiniteGradient { param });
        }

        self.t += 1;
        let b1 = S::from_f64(self.cfg.beta1);
        let b2 = S::from_f64(self.cfg.beta2);
        let one = S::one();
        let lr = S::from_f64(self.cfg.lr);
        let eps = S::from_f64(self.cfg.eps);
        let bc1 = S::from_f64(1.0 - self.cfg.beta1.powi(self.t as i32));
        let bc2 = S::from_f64(1.0 - self.cfg.beta2.powi(self.t as i32));

        let mut idx = 0;
        let m = &mut self.m;
        let v = &mut self.v;
        model.visit_params_mut(&mut |p| {
            let m_t = &mut m[idx];
            let v_t = &mut v[idx];
            debug_assert_eq!(m_t.len(), p.len(), "optimizer/model shape drift");
            for i in 0..p.data.len() {
                let g = p.grad[i];
                m_t[i] = b1 * m_t[i] + (one - b1) * g;
                v_t[i] = b2 * v_t[i] + (one - b2) * g * g;
                let m_hat = m_t[i] / bc1;
                let v_hat = v_t[i] / bc2;
                p.data[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
            idx += 1;
        });
        Ok(())
    }
}
