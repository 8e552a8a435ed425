//! Mask-robust study classifier.
//!
//! Each feature slot becomes one token through a shared input projection; a
//! learned classification token and learned positional embeddings are
//! added, a stack of pre-norm encoder blocks mixes the tokens, and the
//! class logits are read from the classification token after a final layer
//! norm. Unacquired slots are zeroed in the input *and* excluded from
//! attention as keys, so their content cannot influence the logits — the
//! classifier sees exactly the acquired subset, down to the bit.
//!
//! Training draws a fresh random acquisition mask per study per epoch, so
//! the model stays calibrated on every subset of views it may be shown at
//! decision time, including the empty one (the classification token then
//! attends only to itself).

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::balanced_accuracy;
use crate::neural::checkpoint;
use crate::neural::encoder::{BlockCache, EncoderBlock};
use crate::neural::linear::Linear;
use crate::neural::norm::{LayerNorm, LnCache};
use crate::neural::ops::cross_entropy;
use crate::neural::adam::{Adam, AdamConfig};
use crate::neural::{zero_grads, ParamSet, ParamTensor, Scalar};
use crate::study::{AcquisitionState, Label, StudyRecord, apply_mask};
use crate::util::argmax_tie_low;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifierConfig {
    pub model_dim: usize,
    pub n_layers: usize,
    pub n_heads: usize,
    pub ff_dim: usize,
    pub n_classes: usize,
    /// Probability that a slot is hidden during training.
    pub mask_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    /// Optional learning-rate floor. When set, the learning rate follows a
    /// cosine schedule from `lr` down to this value across the run, so late
    /// epochs fine-tune rather than oscillate. That stability matters most
    /// for behavior on heavily masked inputs, which keeps improving after
    /// full-input accuracy has saturated.
    pub lr_min: Option<f64>,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            model_dim: 64,
            n_layers: 6,
            n_heads: 8,
            ff_dim: 256,
            n_classes: 3,
            mask_rate: 0.5,
            epochs: 50,
            batch_size: 32,
            lr: 1e-3,
            lr_min: None,
        }
    }
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<()> {
        if self.model_dim == 0
            || self.n_layers == 0
            || self.n_heads == 0
            || self.ff_dim == 0
            || self.epochs == 0
            || self.batch_size == 0
        {
            return Err(Error::InvalidConfig(
                "classifier dimensions, epochs, and batch size must be positive".into(),
            ));
        }
        if self.model_dim % self.n_heads != 0 {
            return Err(Error::InvalidConfig(format!(
                "model_dim {} not divisible by n_heads {}",
                self.model_dim, self.n_heads
            )));
        }
        if self.n_classes < 2 {
            return Err(Error::InvalidConfig("need at least two classes".into()));
        }
        if !(0.0..=1.0).contains(&self.mask_rate) {
            return Err(Error::InvalidConfig(format!(
                "mask_rate must lie in [0, 1], got {}",
                self.mask_rate
            )));
        }
        if !(self.lr > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "learning rate must be positive, got {}",
                self.lr
            )));
        }
        if let Some(m) = self.lr_min {
            if !(m > 0.0) || m > self.lr {
                return Err(Error::InvalidConfig(format!(
                    "lr_min must lie in (0, lr]; got lr_min {} with lr {}",
                    m, self.lr
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Classifier<S> {
    pub cfg: ClassifierConfig,
    pub n_slots: usize,
    pub feature_dim: usize,
    inproj: Linear<S>,
    cls: ParamTensor<S>,
    pos: ParamTensor<S>,
    blocks: Vec<EncoderBlock<S>>,
    final_ln: LayerNorm<S>,
    head: Linear<S>,
}

/// Forward intermediates for one batch.
pub struct ClassifierCache<S> {
    batch: usize,
    slot_feats: Vec<S>,
    key_mask: Vec<bool>,
    block_caches: Vec<BlockCache<S>>,
    ln_cache: LnCache<S>,
    cls_rows: Vec<S>,
}

impl<S: Scalar> Classifier<S> {
    pub fn new(
        cfg: ClassifierConfig,
        n_slots: usize,
        feature_dim: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        cfg.validate()?;
        if n_slots == 0 || feature_dim == 0 {
            return Err(Error::InvalidConfig(
                "classifier needs at least one slot and one feature dimension".into(),
            ));
        }
        let dm = cfg.model_dim;
        let emb_bound = 1.0 / (dm as f64).sqrt();
        let inproj = Linear::new("inproj", feature_dim, dm, rng);
        let cls = ParamTensor::init_uniform("cls", vec![dm], emb_bound, rng);
        let pos = ParamTensor::init_uniform("pos", vec![n_slots + 1, dm], emb_bound, rng);
        let blocks = (0..cfg.n_layers)
            .map(|l| EncoderBlock::new(&format!("enc{l}"), dm, cfg.n_heads, cfg.ff_dim, rng))
            .collect();
        let final_ln = LayerNorm::new("final_ln", dm);
        let head = Linear::new("head", dm, cfg.n_classes, rng);
        Ok(Classifier {
            cfg,
            n_slots,
            feature_dim,
            inproj,
            cls,
            pos,
            blocks,
            final_ln,
            head,
        })
    }

    /// Tokens per sequence: one per slot plus the classification token.
    pub fn seq_len(&self) -> usize {
        self.n_slots + 1
    }

    /// Class logits for a batch of acquisition states, [batch, n_classes].
    pub fn forward_batch(&self, states: &[AcquisitionState]) -> (Vec<S>, ClassifierCache<S>) {
        let batch = states.len();
        assert!(batch > 0, "empty batch");
        let n = self.n_slots;
        let d = self.feature_dim;
        let dm = self.cfg.model_dim;
        let t = self.seq_len();

        let mut slot_feats = vec![S::zero(); batch * n * d];
        let mut key_mask = vec![false; batch * t];
        for (b, state) in states.iter().enumerate() {
            assert_eq!(state.n(), n, "slot count mismatch");
            assert_eq!(state.d(), d, "feature dimension mismatch");
            key_mask[b * t] = true; // classification token is always visible
            for i in 0..n {
                key_mask[b * t + 1 + i] = state.is_acquired(i);
                for j in 0..d {
                    slot_feats[(b * n + i) * d + j] = S::from_f32(state.row(i)[j]);
                }
            }
        }

        let proj = self.inproj.forward(&slot_feats, batch * n);
        let mut x = vec![S::zero(); batch * t * dm];
        for b in 0..batch {
            for j in 0..dm {
                x[(b * t) * dm + j] = self.cls.data[j] + self.pos.data[j];
            }
            for i in 0..n {
                let src = &proj[(b * n + i) * dm..(b * n + i + 1) * dm];
                let pos = &self.pos.data[(1 + i) * dm..(2 + i) * dm];
                let dst = &mut x[(b * t + 1 + i) * dm..(b * t + 2 + i) * dm];
                for j in 0..dm {
                    dst[j] = src[j] + pos[j];
                }
            }
        }

        let mut block_caches = Vec::with_capacity(self.blocks.len());
        let mut h = x;
        for block in &self.blocks {
            let (next, cache) = block.forward(&h, batch, t, &key_mask);
            block_caches.push(cache);
            h = next;
        }
        let (hn, ln_cache) = self.final_ln.forward(&h, batch * t);
        let mut cls_rows = vec![S::zero(); batch * dm];
        for b in 0..batch {
            cls_rows[b * dm..(b + 1) * dm].copy_from_slice(&hn[(b * t) * dm..(b * t + 1) * dm]);
        }
        let logits = self.head.forward(&cls_rows, batch);
        (
            logits,
            ClassifierCache {
                batch,
                slot_feats,
                key_mask,
                block_caches,
                ln_cache,
                cls_rows,
            },
        )
    }

    /// Accumulates parameter gradients from d(loss)/d(logits).
    pub fn backward(&mut self, cache: &ClassifierCache<S>, dlogits: &[S]) {
        let batch = cache.batch;
        let n = self.n_slots;
        let dm = self.cfg.model_dim;
        let t = self.seq_len();
        debug_assert_eq!(dlogits.len(), batch * self.cfg.n_classes);

        let dcls_rows = self.head.backward(&cache.cls_rows, dlogits, batch);
        let mut dhn = vec![S::zero(); batch * t * dm];
        for b in 0..batch {
            dhn[(b * t) * dm..(b * t + 1) * dm]
                .copy_from_slice(&dcls_rows[b * dm..(b + 1) * dm]);
        }
        let mut dh = self.final_ln.backward(&cache.ln_cache, &dhn);
        for (block, bcache) in self.blocks.iter_mut().zip(&cache.block_caches).rev() {
            dh = block.backward(bcache, &dh, batch, t, &cache.key_mask);
        }

        let mut dproj = vec![S::zero(); batch * n * dm];
        for b in 0..batch {
            for j in 0..dm {
                self.cls.grad[j] += dh[(b * t) * dm + j];
            }
            for tok in 0..t {
                for j in 0..dm {
                    self.pos.grad[tok * dm + j] += dh[(b * t + tok) * dm + j];
                }
            }
            for i in 0..n {
                dproj[(b * n + i) * dm..(b * n + i + 1) * dm]
                    .copy_from_slice(&dh[(b * t + 1 + i) * dm..(b * t + 2 + i) * dm]);
            }
        }
        self.inproj.backward(&cache.slot_feats, &dproj, batch * n);
    }

    pub fn logits(&self, state: &AcquisitionState) -> Vec<S> {
        self.forward_batch(std::slice::from_ref(state)).0
    }

    /// Highest-logit class; ties resolve to the lower label.
    pub fn predict_label(&self, state: &AcquisitionState) -> Label {
        argmax_tie_low(&self.logits(state)) as Label
    }

    /// Predictions for many states, evaluated in fixed-size chunks.
    pub fn predict_batch(&self, states: &[AcquisitionState]) -> Vec<Label> {
        let classes = self.cfg.n_classes;
        let mut out = Vec::with_capacity(states.len());
        for chunk in states.chunks(self.cfg.batch_size.max(1)) {
            let (logits, _) = self.forward_batch(chunk);
            for b in 0..chunk.len() {
                out.push(argmax_tie_low(&logits[b * classes..(b + 1) * classes]) as Label);
            }
        }
        out
    }
}

impl Classifier<f32> {
    /// Save parameters plus enough metadata to rebuild the model.
    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let meta = serde_json::json!({
            "kind": "classifier",
            "config": self.cfg,
            "n_slots": self.n_slots,
            "feature_dim": self.feature_dim,
        });
        checkpoint::save(path, self, meta)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let meta = checkpoint::read_meta(&path)?;
        if meta["kind"] != "classifier" {
            return Err(Error::CheckpointMismatch(format!(
                "expected a classifier checkpoint, found kind {}",
                meta["kind"]
            )));
        }
        let cfg: ClassifierConfig = serde_json::from_value(meta["config"].clone())?;
        let n_slots = meta["n_slots"].as_u64().ok_or_else(|| {
            Error::CheckpointMismatch("missing n_slots in metadata".into())
        })? as usize;
        let feature_dim = meta["feature_dim"].as_u64().ok_or_else(|| {
            Error::CheckpointMismatch("missing feature_dim in metadata".into())
        })? as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut model = Classifier::<f32>::new(cfg, n_slots, feature_dim, &mut rng)?;
        checkpoint::load(path, &mut model)?;
        Ok(model)
    }
}

impl<S: Scalar> ParamSet<S> for Classifier<S> {
    fn visit_params(&self, f: &mut dyn FnMut(&ParamTensor<S>)) {
        self.inproj.visit_params(f);
        f(&self.cls);
        f(&self.pos);
        for b in &self.blocks {
            b.visit_params(f);
        }
        self.final_ln.visit_params(f);
        self.head.visit_params(f);
    }

    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&mut ParamTensor<S>)) {
        self.inproj.visit_params_mut(f);
        f(&mut self.cls);
        f(&mut self.pos);
        for b in &mut self.blocks {
            b.visit_params_mut(f);
        }
        self.final_ln.visit_params_mut(f);
        self.head.visit_params_mut(f);
    }
}

/// One training epoch's summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    /// Balanced accuracy on the validation set under full acquisition.
    pub val_bacc: f64,
    /// Fraction of slots hidden by the random training masks this epoch.
    pub masked_fraction: f64,
}

pub struct TrainedClassifier {
    /// The best-validation model, not the last-epoch one.
    pub model: Classifier<f32>,
    pub history: Vec<EpochStats>,
    pub best_epoch: usize,
    pub best_val_bacc: f64,
}

/// Train with per-study random acquisition masks. Model selection is by
/// validation balanced accuracy under full acquisition; ties keep the
/// earlier epoch.
pub fn train_classifier(
    cfg: &ClassifierConfig,
    train: &[StudyRecord],
    val: &[StudyRecord],
    seed: u64,
    mut on_epoch: impl FnMut(&EpochStats),
) -> Result<TrainedClassifier> {
    cfg.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n_slots = train[0].n_slots();
    let feature_dim = train[0].feature_dim().unwrap_or(0);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = Classifier::<f32>::new(cfg.clone(), n_slots, feature_dim, &mut rng)?;
    let mut opt = Adam::new(AdamConfig {
        lr: cfg.lr,
        ..AdamConfig::default()
    });

    let full_mask = vec![true; n_slots];
    let val_states: Vec<AcquisitionState> = val
        .iter()
        .map(|s| apply_mask(s, &full_mask))
        .collect::<Result<_>>()?;
    let val_labels: Vec<Label> = val.iter().map(|s| s.label).collect();

    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(usize, f64, Classifier<f32>)> = None;

    for epoch in 0..cfg.epochs {
        use rand::seq::SliceRandom;
        order.shuffle(&mut rng);

        if let Some(lr_min) = cfg.lr_min {
            let t = if cfg.epochs > 1 {
                epoch as f64 / (cfg.epochs - 1) as f64
            } else {
                1.0
            };
            opt.cfg.lr =
                lr_min + (cfg.lr - lr_min) * 0.5 * (1.0 + (std::f64::consts::PI * t).cos());
        }

        let mut loss_sum = 0.0f64;
        let mut masked = 0usize;
        let mut drawn = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            let mut states = Vec::with_capacity(chunk.len());
            let mut labels = Vec::with_capacity(chunk.len());
            for &idx in chunk {
                let study = &train[idx];
                let mask: Vec<bool> = (0..n_slots)
                    .map(|_| !rng.random_bool(cfg.mask_rate))
                    .collect();
                masked += mask.iter().filter(|&&m| !m).count();
                drawn += n_slots;
                states.push(apply_mask(study, &mask)?);
                labels.push(study.label);
            }
            let (logits, cache) = model.forward_batch(&states);
            let ce = cross_entropy(&logits, states.len(), cfg.n_classes, &labels);
            let batch_loss = ce.loss.to_f64();
            if !batch_loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch });
            }
            loss_sum += batch_loss * states.len() as f64;
            zero_grads(&mut model);
            model.backward(&cache, &ce.dlogits);
            opt.step(&mut model)?;
        }

        let val_pred = model.predict_batch(&val_states);
        let val_bacc = balanced_accuracy(&val_labels, &val_pred, cfg.n_classes);
        let stats = EpochStats {
            epoch,
            train_loss: loss_sum / train.len() as f64,
            val_bacc,
            masked_fraction: masked as f64 / drawn as f64,
        };
        // Later checkpoints win ties: at equal full-acquisition accuracy,
        // the extra epochs of random-mask training keep sharpening behavior
        // on partial states, which downstream acquisition depends on.
        if best.as_ref().map_or(true, |(_, b, _)| val_bacc >= *b) {
            best = Some((epoch, val_bacc, model.clone()));
        }
        on_epoch(&stats);
        history.push(stats);
    }

    let (best_epoch, best_val_bacc, model) = best.expect("at least one epoch");
    Ok(TrainedClassifier {
        model,
        history,
        best_epoch,
        best_val_bacc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::gradcheck::{grad_check, GradCheckConfig};
    use crate::study::ViewSlot;
    use crate::synth::{generate, GeneratorSpec};

    fn tiny_cfg() -> ClassifierConfig {
        ClassifierConfig {
            model_dim: 8,
            n_layers: 2,
            n_heads: 2,
            ff_dim: 16,
            n_classes: 3,
            mask_rate: 0.5,
            epochs: 5,
            batch_size: 4,
            lr: 1e-3,
            lr_min: None,
        }
    }

    fn study_with(seed: u64, n: usize, d: usize, label: Label) -> StudyRecord {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        StudyRecord {
            study_id: format!("t-{seed}"),
            label,
            slots: (0..n)
                .map(|i| ViewSlot {
                    view: format!("V_{i}"),
                    cost: 1.0,
                    features: (0..d).map(|_| rng.random_range(-1.0..1.0)).collect(),
                })
                .collect(),
        }
    }

    #[test]
    fn config_validation_catches_bad_heads() {
        let cfg = ClassifierConfig {
            model_dim: 10,
            n_heads: 4,
            ..ClassifierConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn end_to_end_gradients_match_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut model = Classifier::<f64>::new(tiny_cfg(), 4, 6, &mut rng).unwrap();
        let studies = [
            study_with(1, 4, 6, 0),
            study_with(2, 4, 6, 1),
            study_with(3, 4, 6, 2),
        ];
        let states = vec![
            apply_mask(&studies[0], &[true, false, true, false]).unwrap(),
            apply_mask(&studies[1], &[true, true, true, true]).unwrap(),
            apply_mask(&studies[2], &[false, false, false, false]).unwrap(),
        ];
        let labels = [0u8, 1, 2];
        let report = grad_check(
            &mut model,
            |m| {
                zero_grads(m);
                let (logits, cache) = m.forward_batch(&states);
                let ce = cross_entropy(&logits, 3, 3, &labels);
                m.backward(&cache, &ce.dlogits);
                ce.loss
            },
            &GradCheckConfig {
                max_per_tensor: Some(24),
                seed: 5,
                ..GradCheckConfig::default()
            },
        );
        assert!(
            report.passed(),
            "max rel err {} at {:?}",
            report.max_rel_err,
            report.worst
        );
    }

    #[test]
    fn masked_content_cannot_influence_logits() {
        // Same mask, wildly different hidden content, including content
        // that is not zeroed: the logits must be identical to the bit.
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let model = Classifier::<f32>::new(tiny_cfg(), 4, 6, &mut rng).unwrap();
        let study = study_with(7, 4, 6, 1);
        let mask = [true, false, true, false];
        let zeroed = apply_mask(&study, &mask).unwrap();

        let mut wild = zeroed.features().to_vec();
        for i in [1usize, 3] {
            for j in 0..6 {
                wild[i * 6 + j] = 1.0e30 * (1 + i + j) as f32;
            }
        }
        let noisy = AcquisitionState::from_raw(mask.to_vec(), wild, 6, zeroed.steps_taken());
        assert_eq!(model.logits(&zeroed), model.logits(&noisy));
    }

    #[test]
    fn all_masked_state_is_legal_and_study_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let model = Classifier::<f32>::new(tiny_cfg(), 4, 6, &mut rng).unwrap();
        let a = apply_mask(&study_with(1, 4, 6, 0), &[false; 4]).unwrap();
        let b = apply_mask(&study_with(99, 4, 6, 2), &[false; 4]).unwrap();
        let la = model.logits(&a);
        assert!(la.iter().all(|v| v.is_finite()));
        assert_eq!(la, model.logits(&b));
        assert_eq!(la, model.logits(&AcquisitionState::empty(4, 6)));
    }

    #[test]
    fn batched_and_single_forward_agree_bitwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        let model = Classifier::<f32>::new(tiny_cfg(), 4, 6, &mut rng).unwrap();
        let states: Vec<AcquisitionState> = (0..5)
            .map(|i| {
                let study = study_with(100 + i, 4, 6, (i % 3) as u8);
                let mask: Vec<bool> = (0..4).map(|s| (s + i as usize) % 2 == 0).collect();
                apply_mask(&study, &mask).unwrap()
            })
            .collect();
        let (batched, _) = model.forward_batch(&states);
        for (b, state) in states.iter().enumerate() {
            assert_eq!(&batched[b * 3..(b + 1) * 3], &model.logits(state)[..]);
        }
    }

    #[test]
    fn training_learns_and_is_deterministic() {
        let spec = GeneratorSpec {
            n_studies: 60,
            noise_sigma: 0.1,
            ..GeneratorSpec::default()
        };
        let studies = generate(&spec).unwrap();
        let (train, val) = studies.split_at(48);
        let cfg = ClassifierConfig {
            epochs: 8,
            batch_size: 16,
            ..tiny_cfg()
        };
        let run = |_: ()| train_classifier(&cfg, train, val, 7, |_| {}).unwrap();
        let a = run(());
        let b = run(());
        assert_eq!(a.history, b.history);
        assert_eq!(a.best_epoch, b.best_epoch);
        assert!(a.history.len() == 8);
        // Loss should clearly improve on this easy task.
        assert!(
            a.history.last().unwrap().train_loss < 0.8 * a.history[0].train_loss,
            "{:?}",
            a.history
        );
        // Mask rate hovers near one half.
        let mf = a.history[0].masked_fraction;
        assert!((mf - 0.5).abs() < 0.15, "masked fraction {mf}");
        // Best checkpoint is the argmax of validation balanced accuracy,
        // latest epoch on ties.
        let best = a
            .history
            .iter()
            .fold(None::<&EpochStats>, |acc, e| match acc {
                Some(cur) if e.val_bacc >= cur.val_bacc => Some(e),
                None => Some(e),
                _ => acc,
            })
            .unwrap();
        assert_eq!(a.best_epoch, best.epoch);
        assert_eq!(a.best_val_bacc, best.val_bacc);
    }

    #[test]
    fn checkpoint_round_trip_preserves_predictions() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("clf.json");
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let model = Classifier::<f32>::new(tiny_cfg(), 4, 6, &mut rng).unwrap();
        model.save(&path).unwrap();
        let loaded = Classifier::<f32>::load(&path).unwrap();
        for i in 0..6 {
            let study = study_with(200 + i, 4, 6, 0);
            let mask: Vec<bool> = (0..4).map(|s| (s + i as usize) % 3 != 0).collect();
            let state = apply_mask(&study, &mask).unwrap();
            assert_eq!(model.logits(&state), loaded.logits(&state));
        }
        assert_eq!(loaded.cfg, tiny_cfg());
        assert_eq!(loaded.n_slots, 4);
        assert_eq!(loaded.feature_dim, 6);
    }

    #[test]
    fn wrong_kind_checkpoint_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("not_clf.json");
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let model = Classifier::<f32>::new(tiny_cfg(), 4, 6, &mut rng).unwrap();
        checkpoint::save(&path, &model, serde_json::json!({"kind": "other"})).unwrap();
        assert!(Classifier::<f32>::load(&path).is_err());
    }
}
