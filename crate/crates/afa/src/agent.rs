//! Value-based acquisition policy trained with double Q-learning.
//!
//! The agent is a plain multilayer perceptron over the flattened acquisition
//! state (feature matrix with unacquired rows zeroed, optionally followed by
//! the acquisition mask bits), emitting one value per action: terminate
//! first, then one per slot. Exploration is epsilon-greedy over the valid
//! actions; transitions go into a bounded first-in-first-out replay buffer
//! sampled uniformly, and bootstrap targets decouple action selection from
//! evaluation: the online network picks the best valid next action, the
//! slower-moving target network prices it.

use std::collections::VecDeque;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::{action_mask, run_episode, EpisodeRecord, Predictor, RewardSpec};
use crate::error::{Error, Result};
use crate::metrics::balanced_accuracy;
use crate::neural::adam::{Adam, AdamConfig};
use crate::neural::checkpoint;
use crate::neural::mlp::Mlp;
use crate::neural::zero_grads;
use crate::study::{AcquisitionState, Action, StudyRecord, N_CLASSES};

/// Hyperparameters for training the acquisition policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AgentConfig {
    /// Hidden layer widths of the value network.
    pub hidden: Vec<usize>,
    pub epochs: usize,
    /// Discount on bootstrapped next-state values. Episodes are short and
    /// rewards terminal, so the default is undiscounted.
    pub gamma: f64,
    pub eps_start: f64,
    pub eps_end: f64,
    /// Fraction of all training episodes over which exploration decays
    /// linearly from `eps_start` to `eps_end`; constant afterwards.
    pub eps_decay_frac: f64,
    pub replay_capacity: usize,
    pub batch_size: usize,
    /// Gradient steps between copies of the online network into the target.
    pub target_sync: usize,
    pub lr: f64,
    /// Optional learning-rate floor. When set, the learning rate follows a
    /// cosine schedule from `lr` down to this value across the epochs, so the
    /// policy settles instead of oscillating once exploration has decayed —
    /// which also makes validation-based checkpoint selection less noisy.
    pub lr_min: Option<f64>,
    /// Allow acquiring an already-acquired slot (a wasted move that makes
    /// timeouts reachable). Off by default.
    pub allow_reselect: bool,
    /// Append the acquisition mask bits to the flattened features. Off by
    /// default: unacquired rows are exactly zero, so the mask is recoverable
    /// from the features; the explicit bits exist for ablation runs.
    pub append_mask: bool,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            hidden: vec![256, 256],
            epochs: 50,
            gamma: 1.0,
            eps_start: 1.0,
            eps_end: 0.05,
            eps_decay_frac: 0.6,
            replay_capacity: 50_000,
            batch_size: 64,
            target_sync: 500,
            lr: 1e-3,
            lr_min: None,
            allow_reselect: false,
            append_mask: false,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.hidden.is_empty() || self.hidden.iter().any(|&h| h == 0) {
            return bad(format!("hidden layers must be non-empty, got {:?}", self.hidden));
        }
        if self.epochs == 0 {
            return bad("epochs must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad(format!("gamma must lie in [0, 1], got {}", self.gamma));
        }
        for (name, eps) in [("eps_start", self.eps_start), ("eps_end", self.eps_end)] {
            if !(0.0..=1.0).contains(&eps) {
                return bad(format!("{name} must lie in [0, 1], got {eps}"));
            }
        }
        if !(self.eps_decay_frac > 0.0 && self.eps_decay_frac <= 1.0) {
            return bad(format!(
                "eps_decay_frac must lie in (0, 1], got {}",
                self.eps_decay_frac
            ));
        }
        if self.batch_size == 0 || self.replay_capacity < self.batch_size {
            return bad(format!(
                "need replay_capacity >= batch_size >= 1, got {} and {}",
                self.replay_capacity, self.batch_size
            ));
        }
        if self.target_sync == 0 {
            return bad("target_sync must be positive".into());
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return bad(format!("lr must be positive, got {}", self.lr));
        }
        if let Some(m) = self.lr_min {
            if !(m > 0.0) || m > self.lr {
                return bad(format!(
                    "lr_min must lie in (0, lr]; got lr_min {} with lr {}",
                    m, self.lr
                ));
            }
        }
        Ok(())
    }
}

/// One stored step of experience.
#[derive(Debug, Clone)]
pub struct Transition {
    pub state: Vec<f32>,
    pub action: usize,
    pub reward: f64,
    pub next_state: Vec<f32>,
    /// Valid actions in the successor state; ignored when `done`.
    pub next_valid: Vec<bool>,
    pub done: bool,
}

/// Bounded uniform replay: oldest transitions are evicted first.
#[derive(Debug, Default)]
pub struct ReplayBuffer {
    buf: VecDeque<Transition>,
    capacity: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0);
        ReplayBuffer { buf: VecDeque::with_capacity(capacity.min(1 << 16)), capacity }
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn push(&mut self, t: Transition) {
        if self.buf.len() == self.capacity {
            self.buf.pop_front();
        }
        self.buf.push_back(t);
    }

    /// Sample `batch` distinct transitions uniformly at random.
    pub fn sample<'a>(&'a self, rng: &mut ChaCha8Rng, batch: usize) -> Vec<&'a Transition> {
        assert!(batch <= self.buf.len(), "not enough transitions to sample");
        rand::seq::index::sample(rng, self.buf.len(), batch)
            .iter()
            .map(|i| &self.buf[i])
            .collect()
    }
}

/// Index of the best valid entry, ties resolved toward the lower index.
fn greedy_index(q: &[f32], valid: &[bool]) -> usize {
    debug_assert_eq!(q.len(), valid.len());
    let mut best: Option<usize> = None;
    for (i, (&v, &ok)) in q.iter().zip(valid).enumerate() {
        if !ok {
            continue;
        }
        match best {
            Some(b) if !(v > q[b]) => {}
            _ => best = Some(i),
        }
    }
    best.expect("no valid action")
}

/// Epsilon-greedy choice among valid actions: with probability `epsilon` a
/// uniform draw over the valid set, otherwise the highest-valued valid
/// action with ties toward the lowest index (termination first).
pub fn select_action(
    q: &[f32],
    valid: &[bool],
    epsilon: f64,
    rng: &mut ChaCha8Rng,
) -> Action {
    debug_assert_eq!(q.len(), valid.len());
    if rng.random_bool(epsilon) {
        let options: Vec<usize> = valid
            .iter()
            .enumerate()
            .filter_map(|(i, &ok)| ok.then_some(i))
            .collect();
        Action::from_index(*options.choose(rng).expect("no valid action"))
    } else {
        Action::from_index(greedy_index(q, valid))
    }
}

/// Bootstrap value for one transition.
///
/// Terminal transitions return the raw reward. Otherwise the online network
/// chooses the best valid next action and the target network supplies its
/// value: `r + gamma * q_target[argmax_valid q_online]`.
pub fn ddqn_target(
    reward: f64,
    done: bool,
    gamma: f64,
    next_q_online: &[f32],
    next_q_target: &[f32],
    next_valid: &[bool],
) -> f64 {
    if done {
        return reward;
    }
    let chosen = greedy_index(next_q_online, next_valid);
    reward + gamma * next_q_target[chosen] as f64
}

/// A trained (or training) value network bound to its state encoding.
#[derive(Debug, Clone)]
pub struct AgentPolicy {
    qnet: Mlp<f32>,
    cfg: AgentConfig,
    n_slots: usize,
    feature_dim: usize,
}

impl AgentPolicy {
    pub fn new(cfg: AgentConfig, n_slots: usize, feature_dim: usize, rng: &mut ChaCha8Rng) -> Result<Self> {
        cfg.validate()?;
        let in_dim = AcquisitionState::flat_dim(n_slots, feature_dim, cfg.append_mask);
        let mut dims = Vec::with_capacity(cfg.hidden.len() + 2);
        dims.push(in_dim);
        dims.extend_from_slice(&cfg.hidden);
        dims.push(Action::count(n_slots));
        let qnet = Mlp::new("qnet", &dims, rng);
        Ok(AgentPolicy { qnet, cfg, n_slots, feature_dim })
    }

    pub fn config(&self) -> &AgentConfig {
        &self.cfg
    }

    pub fn n_slots(&self) -> usize {
        self.n_slots
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    fn encode_into(&self, state: &AcquisitionState, out: &mut Vec<f32>) {
        state.flatten_into(out, self.cfg.append_mask);
    }

    pub fn encode(&self, state: &AcquisitionState) -> Vec<f32> {
        let mut out = Vec::with_capacity(self.qnet.in_dim());
        self.encode_into(state, &mut out);
        out
    }

    /// Action values for one state (terminate first, then each slot).
    pub fn q_values(&self, state: &AcquisitionState) -> Vec<f32> {
        let x = self.encode(state);
        self.qnet.forward(&x, 1).0
    }

    /// Highest-valued valid action, ties toward termination / lower slots.
    pub fn greedy_action(&self, state: &AcquisitionState) -> Action {
        let q = self.q_values(state);
        let valid = action_mask(state, self.cfg.allow_reselect);
        Action::from_index(greedy_index(&q, &valid))
    }

    /// Run one greedy episode on a study.
    pub fn rollout<P: Predictor + ?Sized>(
        &self,
        study: &StudyRecord,
        reward: &RewardSpec,
        predictor: &P,
    ) -> Result<EpisodeRecord> {
        run_episode(study, reward, predictor, self.cfg.allow_reselect, |state, _| {
            self.greedy_action(state)
        })
    }

    /// Save parameters plus enough metadata to rebuild the policy.
    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let meta = serde_json::json!({
            "kind": "agent",
            "config": self.cfg,
            "n_slots": self.n_slots,
            "feature_dim": self.feature_dim,
        });
        checkpoint::save(path, &self.qnet, meta)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let meta = checkpoint::read_meta(&path)?;
        if meta["kind"] != "agent" {
            return Err(Error::CheckpointMismatch(format!(
                "expected an agent checkpoint, found kind {}",
                meta["kind"]
            )));
        }
        let cfg: AgentConfig = serde_json::from_value(meta["config"].clone())?;
        let n_slots = meta["n_slots"]
            .as_u64()
            .ok_or_else(|| Error::CheckpointMismatch("missing n_slots in metadata".into()))?
            as usize;
        let feature_dim = meta["feature_dim"]
            .as_u64()
            .ok_or_else(|| Error::CheckpointMismatch("missing feature_dim in metadata".into()))?
            as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut policy = AgentPolicy::new(cfg, n_slots, feature_dim, &mut rng)?;
        checkpoint::load(path, &mut policy.qnet)?;
        Ok(policy)
    }
}

/// Per-epoch training trace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AgentEpochStats {
    pub epoch: usize,
    /// Mean total reward of this epoch's exploration episodes.
    pub mean_reward: f64,
    /// Balanced accuracy of greedy rollouts on the validation split.
    pub val_bacc: f64,
    /// Mean number of slots acquired by those greedy rollouts.
    pub mean_acquired_count: f64,
    /// Exploration rate at the end of the epoch.
    pub epsilon: f64,
}

/// Training result: the best policy by validation balanced accuracy
/// (earliest epoch on ties) and the full per-epoch history.
#[derive(Debug)]
pub struct TrainedAgent {
    pub policy: AgentPolicy,
    pub history: Vec<AgentEpochStats>,
    pub best_epoch: usize,
    pub best_val_bacc: f64,
}

/// Train an acquisition policy against a fixed predictor.
///
/// Runs one epsilon-greedy episode per training study per epoch (shuffled
/// each epoch), takes one gradient step per environment step once the replay
/// buffer can fill a batch, and copies the online network into the target
/// every `target_sync` gradient steps. Exploration decays linearly over the
/// first `eps_decay_frac` of all episodes, measured at episode starts.
pub fn train_agent<P: Predictor + ?Sized>(
    cfg: &AgentConfig,
    reward: &RewardSpec,
    train: &[StudyRecord],
    val: &[StudyRecord],
    predictor: &P,
    seed: u64,
    mut on_epoch: impl FnMut(&AgentEpochStats),
) -> Result<TrainedAgent> {
    cfg.validate()?;
    reward.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n_slots = train[0].slots.len();
    let feature_dim = train[0].slots[0].features.len();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut policy = AgentPolicy::new(cfg.clone(), n_slots, feature_dim, &mut rng)?;
    let mut target = policy.qnet.clone();
    let mut opt: Adam<f32> = Adam::new(AdamConfig { lr: cfg.lr, ..Default::default() });
    let mut replay = ReplayBuffer::new(cfg.replay_capacity);

    let total_episodes = cfg.epochs * train.len();
    let decay_len = ((total_episodes as f64) * cfg.eps_decay_frac).max(1.0);
    let epsilon_at = |episode: usize| -> f64 {
        let frac = ((episode as f64) / decay_len).min(1.0);
        cfg.eps_start + (cfg.eps_end - cfg.eps_start) * frac
    };

    let n_actions = Action::count(n_slots);
    let mut grad_steps: usize = 0;
    let mut episode_idx: usize = 0;
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(usize, f64, Mlp<f32>)> = None;

    for epoch in 0..cfg.epochs {
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
        let mut reward_sum = 0.0;
        for &study_idx in &order {
            let study = &train[study_idx];
            let eps = epsilon_at(episode_idx);
            episode_idx += 1;
            let mut state = AcquisitionState::empty(n_slots, feature_dim);
            loop {
                let valid = action_mask(&state, cfg.allow_reselect);
                let q = policy.q_values(&state);
                let action = select_action(&q, &valid, eps, &mut rng);
                let outcome =
                    crate::env::step(study, &state, action, reward, predictor, cfg.allow_reselect)?;
                reward_sum += outcome.reward;
                replay.push(Transition {
                    state: policy.encode(&state),
                    action: action.index(),
                    reward: outcome.reward,
                    next_state: policy.encode(&outcome.state),
                    next_valid: action_mask(&outcome.state, cfg.allow_reselect),
                    done: outcome.done,
                });
                state = outcome.state;

                if replay.len() >= cfg.batch_size {
                    let loss = learn_step(
                        &mut policy.qnet,
                        &mut target,
                        &mut opt,
                        &replay,
                        cfg,
                        n_actions,
                        &mut rng,
                    )?;
                    if !loss.is_finite() {
                        return Err(Error::NonFiniteLoss { epoch });
                    }
                    grad_steps += 1;
                    if grad_steps % cfg.target_sync == 0 {
                        target.copy_params_from(&policy.qnet);
                    }
                }
                if outcome.done {
                    break;
                }
            }
        }

        // Greedy validation rollouts decide which epoch's weights survive.
        let mut labels = Vec::with_capacity(val.len());
        let mut preds = Vec::with_capacity(val.len());
        let mut acquired_sum = 0.0;
        for study in val {
            let ep = policy.rollout(study, reward, predictor)?;
            labels.push(ep.label);
            preds.push(ep.scored_prediction());
            acquired_sum += ep.acquired_count as f64;
        }
        let val_bacc = balanced_accuracy(&labels, &preds, N_CLASSES);
        let stats = AgentEpochStats {
            epoch,
            mean_reward: reward_sum / train.len() as f64,
            val_bacc,
            mean_acquired_count: acquired_sum / val.len() as f64,
            epsilon: epsilon_at(episode_idx.saturating_sub(1)),
        };
        on_epoch(&stats);
        history.push(stats);
        let improved = match &best {
            Some((_, b, _)) => val_bacc > *b,
            None => true,
        };
        if improved {
            best = Some((epoch, val_bacc, policy.qnet.clone()));
        }
    }

    let (best_epoch, best_val_bacc, qnet) = best.expect("at least one epoch ran");
    policy.qnet = qnet;
    Ok(TrainedAgent { policy, history, best_epoch, best_val_bacc })
}

/// One uniform-replay double-Q gradient step; returns the batch loss.
fn learn_step(
    online: &mut Mlp<f32>,
    target: &Mlp<f32>,
    opt: &mut Adam<f32>,
    replay: &ReplayBuffer,
    cfg: &AgentConfig,
    n_actions: usize,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let batch = replay.sample(rng, cfg.batch_size);
    let b = batch.len();
    let in_dim = online.in_dim();

    // Price every successor once, batched, before touching gradients.
    let mut next_x = Vec::with_capacity(b * in_dim);
    for t in &batch {
        next_x.extend_from_slice(&t.next_state);
    }
    let (next_q_online, _) = online.forward(&next_x, b);
    let (next_q_target, _) = target.forward(&next_x, b);
    let targets: Vec<f64> = batch
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let row = i * n_actions..(i + 1) * n_actions;
            ddqn_target(
                t.reward,
                t.done,
                cfg.gamma,
                &next_q_online[row.clone()],
                &next_q_target[row],
                &t.next_valid,
            )
        })
        .collect();

    let mut x = Vec::with_capacity(b * in_dim);
    for t in &batch {
        x.extend_from_slice(&t.state);
    }
    let (q, cache) = online.forward(&x, b);
    // Squared error on the taken action only; other outputs get no gradient.
    let mut dq = vec![0.0f32; q.len()];
    let mut loss = 0.0f64;
    for (i, t) in batch.iter().enumerate() {
        let idx = i * n_actions + t.action;
        let diff = q[idx] as f64 - targets[i];
        loss += diff * diff;
        dq[idx] = (2.0 * diff / b as f64) as f32;
    }
    loss /= b as f64;

    zero_grads(online);
    online.backward(&cache, &dq, b);
    opt.step(online)?;
    Ok(loss)
}
