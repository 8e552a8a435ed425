//! Central-difference gradient verification.
//!
//! The checker runs the model's own backward pass once, then probes
//! parameters with two-sided finite differences and compares. It is meant
//! to be instantiated in f64, where truncation and roundoff stay orders of
//! magnitude below any honest analytic gradient error.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{ParamSet, ParamTensor};

#[derive(Debug, Clone)]
pub struct GradCheckConfig {
    /// Finite-difference step.
    pub step: f64,
    /// A probe fails when its relative error reaches this.
    pub rel_tol: f64,
    /// Floor of the relative-error denominator, so near-zero gradients are
    /// compared absolutely against `denom_floor * rel_tol`.
    pub denom_floor: f64,
    /// Upper bound on probes per tensor; `None` checks every component.
    pub max_per_tensor: Option<usize>,
    /// Seed for the probe subsampling.
    pub seed: u64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig {
            step: 1e-5,
            rel_tol: 1e-4,
            denom_floor: 1e-2,
            max_per_tensor: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Probe {
    pub tensor: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_err: f64,
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub rel_tol: f64,
    pub n_probes: usize,
    pub n_tensors: usize,
    pub max_rel_err: f64,
    pub worst: Option<Probe>,
    /// Probes over tolerance, capped at 32 entries.
    pub failures: Vec<Probe>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_rel_err < self.rel_tol
    }
}

/// Check analytic gradients of `model` against central differences of
/// `eval`. The closure must deterministically compute the scalar loss AND
/// leave d(loss)/d(param) in every tensor's `grad` (zeroing beforehand);
/// the checker calls it repeatedly under perturbed parameters.
pub fn grad_check<M: ParamSet<f64>>(
    model: &mut M,
    mut eval: impl FnMut(&mut M) -> f64,
    cfg: &GradCheckConfig,
) -> GradCheckReport {
    eval(model);
    let mut analytic: Vec<(String, Vec<f64>)> = Vec::new();
    model.visit_params(&mut |p: &ParamTensor<f64>| {
        analytic.push((p.name.clone(), p.grad.clone()));
    });

    let mut report = GradCheckReport {
        rel_tol: cfg.rel_tol,
        n_probes: 0,
        n_tensors: analytic.len(),
        max_rel_err: 0.0,
        worst: None,
        failures: Vec::new(),
    };

    for t in 0..analytic.len() {
        let len = analytic[t].1.len();
        let mut indices: Vec<usize> = match cfg.max_per_tensor {
            Some(k) if k < len => {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(t as u64 + 1);
                rand::seq::index::sample(&mut rng, len, k).into_vec()
            }
            _ => (0..len).collect(),
        };
        indices.sort_unstable();

        for i in indices {
            let orig = with_param(model, t, |p| {
                let v = p.data[i];
                p.data[i] = v + cfg.step;
                v
            });
            let loss_plus = eval(model);
            with_param(model, t, |p| p.data[i] = orig - cfg.step);
            let loss_minus = eval(model);
            with_param(model, t, |p| p.data[i] = orig);

            let numeric = (loss_plus - loss_minus) / (2.0 * cfg.step);
            let a = analytic[t].1[i];
            let denom = a.abs().max(numeric.abs()).max(cfg.denom_floor);
            let rel_err = (a - numeric).abs() / denom;
            report.n_probes += 1;
            let probe = Probe {
                tensor: analytic[t].0.clone(),
                index: i,
                analytic: a,
                numeric,
                rel_err,
            };
            if rel_err > report.max_rel_err {
                report.max_rel_err = rel_err;
                report.worst = Some(probe.clone());
            }
            if rel_err >= cfg.rel_tol && report.failures.len() < 32 {
                report.failures.push(probe);
            }
        }
    }
    // Leave the model's gradients in their unperturbed state.
    eval(model);
    report
}

fn with_param<M: ParamSet<f64>, R>(
    model: &mut M,
    tensor_idx: usize,
    f: impl FnOnce(&mut ParamTensor<f64>) -> R,
) -> R {
    let mut f = Some(f);
    let mut out = None;
    let mut count = 0;
    model.visit_params_mut(&mut |p| {
        if count == tensor_idx {
            out = Some((f.take().expect("visited once"))(p));
        }
        count += 1;
    });
    out.expect("tensor index in range")
}
