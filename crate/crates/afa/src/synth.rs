//! Synthetic study generator and its closed-form reference predictor.
//!
//! Each study hides two independent fair bits; the label is their sum. The
//! first bit is written into the first half of the feature dimensions of
//! both PLAX slots, the second bit into the second half of both PSAX slots,
//! scaled by a per-slot quality factor; every other dimension carries pure
//! noise. Within each view pair one slot, chosen at random, draws its
//! quality from the good range while its sibling draws from the degraded
//! range, so one view of each pair is usually far more informative.
//!
//! Because the generative model is fully known, the exact posterior over
//! labels given any subset of acquired slots has a closed form up to a
//! one-dimensional quality integral; [`BayesOracle`] evaluates it and serves
//! as the reference predictor that learned models are measured against.

use std::f64::consts::LN_2;
use std::path::Path;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::study::{AcquisitionState, Label, StudyRecord, ViewScheme, ViewSlot, N_CLASSES};
use crate::util::argmax_tie_low;

/// Number of quality-integration intervals used by the reference predictor.
const QUALITY_INTERVALS: usize = 512;

/// Parameters of the synthetic generative model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeneratorSpec {
    pub n_studies: usize,
    /// Per-slot feature dimension; must be even and at least 4. The first
    /// half carries the PLAX signal, the second half the PSAX signal.
    pub feature_dim: usize,
    /// Standard deviation of the additive per-dimension noise.
    pub noise_sigma: f64,
    /// Quality range of the informative slot of each view pair.
    pub quality_good: (f64, f64),
    /// Quality range of the other slot of each view pair.
    pub quality_degraded: (f64, f64),
    pub slot_cost: f32,
    pub seed: u64,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        GeneratorSpec {
            n_studies: 2000,
            feature_dim: 16,
            noise_sigma: 0.3,
            quality_good: (0.8, 1.0),
            quality_degraded: (0.1, 0.4),
            slot_cost: 1.0,
            seed: 1,
        }
    }
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_studies == 0 {
            return Err(Error::InvalidConfig("n_studies must be positive".into()));
        }
        if self.feature_dim < 4 || self.feature_dim % 2 != 0 {
            return Err(Error::InvalidConfig(format!(
                "feature_dim must be even and at least 4, got {}",
                self.feature_dim
            )));
        }
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "noise_sigma must be finite and non-negative, got {}",
                self.noise_sigma
            )));
        }
        for (name, (lo, hi)) in [
            ("quality_good", self.quality_good),
            ("quality_degraded", self.quality_degraded),
        ] {
            if !(lo > 0.0 && lo <= hi && hi <= 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must satisfy 0 < lo <= hi <= 1, got ({lo}, {hi})"
                )));
            }
        }
        if !(self.slot_cost >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "slot_cost must be non-negative, got {}",
                self.slot_cost
            )));
        }
        Ok(())
    }

    /// Write the spec as pretty JSON next to the dataset it produced.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)
                    .map_err(|e| Error::io(parent.display().to_string(), e))?;
            }
        }
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<GeneratorSpec> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let spec: GeneratorSpec = serde_json::from_str(&text)?;
        spec.validate()?;
        Ok(spec)
    }
}

/// Deterministically generate study `idx`. Every study runs on its own RNG
/// stream of the seeded generator, so studies are independent of how many
/// others are produced and in what order.
///
/// Draw order within a study: one bit per view family, then per view pair
/// the good-slot coin and the two quality factors (lower-indexed slot
/// first), then one standard-normal noise value per feature dimension, slot
/// by slot in scheme order. Noise is drawn even when `noise_sigma` is zero,
/// so specs differing only in sigma share every other random draw.
pub fn generate_study(spec: &GeneratorSpec, idx: usize) -> StudyRecord {
    let scheme = ViewScheme::default();
    let families = scheme.family_slots();
    let d = spec.feature_dim;
    let h = d / 2;

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(idx as u64 + 1);

    let bits: Vec<bool> = families.iter().map(|_| rng.random_bool(0.5)).collect();
    let label: Label = bits.iter().map(|&b| b as u8).sum();

    let n_slots = scheme.n_slots();
    let mut quality = vec![0.0f64; n_slots];
    for (_, slots) in &families {
        debug_assert_eq!(slots.len(), 2, "view families come in pairs");
        let good_first = rng.random_bool(0.5);
        let ranges = if good_first {
            [spec.quality_good, spec.quality_degraded]
        } else {
            [spec.quality_degraded, spec.quality_good]
        };
        quality[slots[0]] = rng.random_range(ranges[0].0..=ranges[0].1);
        quality[slots[1]] = rng.random_range(ranges[1].0..=ranges[1].1);
    }

    let mut slot_family = vec![0usize; n_slots];
    for (f, (_, slots)) in families.iter().enumerate() {
        for &s in slots {
            slot_family[s] = f;
        }
    }

    let mut out_slots = Vec::with_capacity(n_slots);
    for slot in 0..n_slots {
        let fam = slot_family[slot];
        let sign = if bits[fam] { 1.0 } else { -1.0 };
        let sig = fam * h..(fam + 1) * h;
        let mut features = Vec::with_capacity(d);
        for dim in 0..d {
            let mu = if sig.contains(&dim) { sign } else { 0.0 };
            let eps: f64 = StandardNormal.sample(&mut rng);
            features.push((quality[slot] * mu + spec.noise_sigma * eps) as f32);
        }
        out_slots.push(ViewSlot {
            view: scheme.slot_name(slot),
            cost: spec.slot_cost,
            features,
        });
    }

    StudyRecord {
        study_id: format!("synth-{idx:06}"),
        label,
        slots: out_slots,
    }
}

/// Generate the full dataset described by the spec.
pub fn generate(spec: &GeneratorSpec) -> Result<Vec<StudyRecord>> {
    spec.validate()?;
    Ok((0..spec.n_studies)
        .map(|idx| generate_study(spec, idx))
        .collect())
}

/// Exact posterior predictor for the synthetic generative model.
///
/// Per view family the sum of an acquired slot's signal-half dimensions is a
/// sufficient statistic; its likelihood under each bit value is a Gaussian
/// in the slot's quality, which gets integrated over the good and degraded
/// quality ranges (composite Simpson in the log domain) and mixed over the
/// two possible good/degraded assignments of the pair. The two family
/// posteriors then factorize into the three label probabilities.
#[derive(Debug, Clone)]
pub struct BayesOracle {
    scheme: ViewScheme,
    feature_dim: usize,
    h: usize,
    sigma: f64,
    good: (f64, f64),
    degraded: (f64, f64),
}

impl BayesOracle {
    pub fn from_spec(spec: &GeneratorSpec) -> Result<BayesOracle> {
        spec.validate()?;
        Ok(BayesOracle {
            scheme: ViewScheme::default(),
            feature_dim: spec.feature_dim,
            h: spec.feature_dim / 2,
            sigma: spec.noise_sigma,
            good: spec.quality_good,
            degraded: spec.quality_degraded,
        })
    }

    /// Posterior probability of each label given the acquired slots.
    pub fn label_posterior(&self, state: &AcquisitionState) -> [f64; N_CLASSES] {
        assert_eq!(state.n(), self.scheme.n_slots(), "slot count mismatch");
        assert_eq!(state.d(), self.feature_dim, "feature dimension mismatch");
        let mut bit_p = [0.5f64; 2];
        for (fam, (_, slots)) in self.scheme.family_slots().iter().enumerate() {
            let mut stats = Vec::with_capacity(2);
            for &slot in slots {
                if state.is_acquired(slot) {
                    stats.push(self.signal_sum(state.row(slot), fam));
                }
            }
            bit_p[fam] = self.family_posterior(&stats);
        }
        let (pa, pb) = (bit_p[0], bit_p[1]);
        [
            (1.0 - pa) * (1.0 - pb),
            pa * (1.0 - pb) + (1.0 - pa) * pb,
            pa * pb,
        ]
    }

    /// Maximum-posterior label; ties resolve to the lower label.
    pub fn predict(&self, state: &AcquisitionState) -> Label {
        argmax_tie_low(&self.label_posterior(state)) as Label
    }

    /// Sum of a slot row over its family's signal half, in f64.
    fn signal_sum(&self, row: &[f32], fam: usize) -> f64 {
        row[fam * self.h..(fam + 1) * self.h]
            .iter()
            .map(|&v| v as f64)
            .sum()
    }

    /// P(bit = 1) from the signal sums of the family's acquired slots.
    fn family_posterior(&self, stats: &[f64]) -> f64 {
        if stats.is_empty() {
            return 0.5;
        }
        if self.sigma == 0.0 {
            // Quality is strictly positive, so any acquired slot reveals the
            // bit through the sign of its signal sum.
            let t: f64 = stats.iter().sum();
            return if t > 0.0 {
                1.0
            } else if t < 0.0 {
                0.0
            } else {
                0.5
            };
        }
        let log_l = |s: f64| -> f64 {
            match stats {
                [t] => logsumexp2(
                    self.log_marginal(*t, s, self.good),
                    self.log_marginal(*t, s, self.degraded),
                ) - LN_2,
                [t1, t2] => logsumexp2(
                    self.log_marginal(*t1, s, self.good)
                        + self.log_marginal(*t2, s, self.degraded),
                    self.log_marginal(*t1, s, self.degraded)
                        + self.log_marginal(*t2, s, self.good),
                ) - LN_2,
                _ => panic!("view pairs carry exactly two slots"),
            }
        };
        let delta = log_l(-1.0) - log_l(1.0);
        1.0 / (1.0 + delta.exp())
    }

    /// Log-likelihood of signal sum `t` given bit sign `s`, with the slot's
    /// quality integrated uniformly over `range`. Constant factors shared by
    /// both signs are dropped.
    fn log_marginal(&self, t: f64, s: f64, range: (f64, f64)) -> f64 {
        let two_var = 2.0 * self.sigma * self.sigma;
        let hh = self.h as f64;
        let g = |q: f64| (2.0 * q * s * t - hh * q * q) / two_var;
        let (lo, hi) = range;
        if hi - lo <= f64::EPSILON {
            return g(lo);
        }
        log_simpson_exp(g, lo, hi, QUALITY_INTERVALS) - (hi - lo).ln()
    }
}

/// log of the composite-Simpson approximation of the integral of exp(g)
/// over [lo, hi], evaluated in the log domain.
fn log_simpson_exp(g: impl Fn(f64) -> f64, lo: f64, hi: f64, intervals: usize) -> f64 {
    debug_assert!(intervals >= 2 && intervals % 2 == 0);
    let dq = (hi - lo) / intervals as f64;
    let mut vals = Vec::with_capacity(intervals + 1);
    for i in 0..=intervals {
        let q = if i == intervals { hi } else { lo + dq * i as f64 };
        vals.push(g(q));
    }
    let m = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let mut sum = 0.0;
    for (i, &v) in vals.iter().enumerate() {
        let w = if i == 0 || i == intervals {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        sum += w * (v - m).exp();
    }
    m + (sum * dq / 3.0).ln()
}

fn logsumexp2(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}
